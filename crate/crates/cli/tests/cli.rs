use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stoch-align"))
        .args(args)
        .current_dir(dir)
        .env_remove("STOCH_ALIGN_THREADS")
        .output()
        .expect("binary runs")
}

fn table(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn f(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_csv_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let o = bin(
        dir.path(),
        &[
            "simulate", "--policy", "wstar", "--n", "3", "--rounds", "100", "--reps", "2000", "--seed", "7", "--out",
            "run.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = table(&dir.path().join("run.csv"));
    assert_eq!(header, "round,var_stretch,mean_abs_stretch,stderr");
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[100][0], "100");
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.config.json")).unwrap()).unwrap();
    assert_eq!(side["n"], 3);
    assert_eq!(side["seed"], 7);
    assert_eq!(side["horizon"], 100);
    assert_eq!(side["policy"], "wstar");
    // the sidecar is itself a valid config and reproduces the run
    let again = bin(
        dir.path(),
        &["simulate", "--config", "run.config.json", "--out", "again.csv"],
    );
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(
        fs::read(dir.path().join("run.csv")).unwrap(),
        fs::read(dir.path().join("again.csv")).unwrap()
    );
}

#[test]
fn weighted_simulation_approaches_closed_form() {
    let dir = TempDir::new().unwrap();
    let o = bin(
        dir.path(),
        &[
            "simulate", "--policy", "weighted", "--rho", "0.5", "--n", "2", "--rounds", "100", "--reps", "50000",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    // n = 2, rho = 1/2: 2 (1/4 + 1) / (1 - 0²) = 2.5
    let (_, rows) = table(&dir.path().join("simulate.csv"));
    let var = f(&rows[100][1]);
    assert!((var / 2.5 - 1.0).abs() < 0.03, "{var}");
    assert!(stdout(&o).contains("var_limit 2.5"), "{}", stdout(&o));
}

#[test]
fn out_of_range_rho_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = bin(dir.path(), &["simulate", "--policy", "weighted", "--rho", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[0,1]"), "{}", stderr(&o));
    let o = bin(dir.path(), &["simulate", "--policy", "weighted"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(dir.path(), &["simulate", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(dir.path(), &["simulate", "--sigma-m", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_wstar_matc() {
    let dir = TempDir::new().unwrap();
    let o = bin(
        dir.path(),
        &[
            "compare",
            "--a",
            "wstar",
            "--b",
            "matc",
            "--n",
            "3",
            "--sigma-m",
            "1",
            "--sigma-d",
            "1",
            "--reps",
            "200",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("shift equivalence: PASS"));
    let (header, rows) = table(&dir.path().join("compare.csv"));
    assert_eq!(header, "round,com_a,com_b,max_stretch_diff,move_shift");
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert!(f(&r[3]) <= 1e-9);
    }
    assert_eq!(rows[100][4], "");
    // drift is shared, so the gap between centers grows by exactly the shift
    for w in rows.windows(2) {
        let gap = |r: &Vec<String>| f(&r[1]) - f(&r[2]);
        let step = gap(&w[1]) - gap(&w[0]);
        assert!((step - f(&w[0][4])).abs() <= 1e-11, "{step} vs {}", w[0][4]);
    }

    let o = bin(
        dir.path(),
        &[
            "compare", "--a", "matc", "--b", "wstar", "--reps", "50", "--out", "rev.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rev) = table(&dir.path().join("rev.csv"));
    // replication 0 is the same run, seen from the other side
    for (r, q) in rev.iter().zip(&rows).take(100) {
        assert_eq!((&r[1], &r[2]), (&q[2], &q[1]));
        assert_eq!(f(&r[4]), -f(&q[4]));
    }
}

#[test]
fn compare_identical_policies() {
    let dir = TempDir::new().unwrap();
    let o = bin(
        dir.path(),
        &[
            "compare", "--a", "weighted", "--rho-a", "0.3", "--b", "weighted", "--rho-b", "0.3", "--reps", "100",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = table(&dir.path().join("compare.csv"));
    for r in &rows {
        assert_eq!(r[1], r[2]);
        assert_eq!(r[3], "0");
    }
}

#[test]
fn sweep_finds_rho_star() {
    let dir = TempDir::new().unwrap();
    let o = bin(
        dir.path(),
        &[
            "sweep",
            "--n",
            "2",
            "--reps",
            "5000",
            "--rounds",
            "200",
            "--grid-start",
            "0.3",
            "--grid-stop",
            "0.56",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = table(&dir.path().join("sweep.csv"));
    assert_eq!(header, "rho,var_empirical,var_closed_form");
    assert_eq!(rows.len(), 14);
    let best = rows.iter().min_by(|a, b| f(&a[1]).total_cmp(&f(&b[1]))).unwrap();
    assert!((f(&best[0]) - (2f64.sqrt() - 1.0)).abs() <= 0.02, "{best:?}");
    for r in &rows {
        // n = 2: (rho² + 1) / (2 rho (1 - rho))
        let rho = f(&r[0]);
        let closed = (rho * rho + 1.0) / (2.0 * rho * (1.0 - rho));
        assert!((f(&r[2]) / closed - 1.0).abs() < 1e-14);
    }
    assert!(stdout(&o).contains("within one step: yes"));

    let o = bin(
        dir.path(),
        &[
            "sweep",
            "--reps",
            "500",
            "--rounds",
            "200",
            "--grid-start",
            "0",
            "--grid-stop",
            "0.1",
            "--grid-step",
            "0.05",
            "--out",
            "zero.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = table(&dir.path().join("zero.csv"));
    assert_eq!(rows[0][0], "0");
    assert_eq!(rows[0][1], "divergent");
    assert_eq!(rows[0][2], "inf");
    assert_ne!(rows[1][1], "divergent");
}

#[test]
fn kalman_check_passes() {
    let dir = TempDir::new().unwrap();
    let o = bin(dir.path(), &["kalman-check", "--n", "3", "--t-max", "100"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("alpha_infinity"));
    let (header, rows) = table(&dir.path().join("kalman_check.csv"));
    assert_eq!(header, "t,alpha,rho_star,max_deviation");
    assert_eq!(rows.len(), 101);
    // n = 3, sigmas 1: alpha_0 = 3/2, rho_star(0) = 1.5 / (1.5 * 1.5 + 1)
    assert_eq!(f(&rows[0][1]), 1.5);
    assert!((f(&rows[0][2]) - 1.5 / 3.25).abs() < 1e-16);

    let o = bin(
        dir.path(),
        &["kalman-check", "--n", "2", "--sigma0", "0", "--out", "flat.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = table(&dir.path().join("flat.csv"));
    assert_eq!((rows[0][1].as_str(), rows[0][2].as_str()), ("0", "0"));
}

#[test]
fn best_response_modes() {
    let dir = TempDir::new().unwrap();
    let o = bin(dir.path(), &["best-response", "--opponents", "wstar", "--t-max", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = table(&dir.path().join("best_response.csv"));
    assert_eq!(header, "t,opp_rho,best_response,residual");
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| f(&r[3]) <= 1e-12));

    let o = bin(dir.path(), &["best-response", "--policy", "weighted", "--rho", "0.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (_, rows) = table(&dir.path().join("best_response.csv"));
    assert!(rows.iter().any(|r| f(&r[3]) > 1e-3));

    let o = bin(
        dir.path(),
        &["best-response", "--policy", "weighted", "--rho", "0.9", "--assert-nash"],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = bin(dir.path(), &["best-response", "--policy", "matc"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"n": 4, "horizon": 10, "replications": 50, "seed": 3, "policy": "matc", "out": "from_file.csv"}"#,
    )
    .unwrap();
    let o = bin(dir.path(), &["simulate", "--config", "c.json", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let side: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("from_file.config.json")).unwrap()).unwrap();
    assert_eq!(side["n"], 4);
    assert_eq!(side["seed"], 9);
    assert_eq!(side["policy"], "matc");
    assert_eq!(table(&dir.path().join("from_file.csv")).1.len(), 11);

    fs::write(dir.path().join("bad.json"), r#"{"n": 4, "rounds": 10}"#).unwrap();
    let o = bin(dir.path(), &["simulate", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rounds"), "{}", stderr(&o));
    let o = bin(dir.path(), &["simulate", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic_across_threads() {
    let dir = TempDir::new().unwrap();
    let args = [
        "simulate", "--policy", "weighted", "--rho", "0.4", "--n", "5", "--rounds", "30", "--reps", "3000",
    ];
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_stoch-align"))
            .args(args)
            .args(["--out", out])
            .current_dir(dir.path())
            .env("STOCH_ALIGN_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(dir.path().join(out)).unwrap()
    };
    let one = run("1", "a.csv");
    assert_eq!(one, run("1", "b.csv"));
    assert_eq!(one, run("4", "c.csv"));
    let o = bin(dir.path(), &["simulate", "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
