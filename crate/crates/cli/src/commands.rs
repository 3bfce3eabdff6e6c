//! Subcommand implementations.

use stoch_align::analysis::{alpha_infty, predict, rho_star_const};
use stoch_align::game::best_response as compute_best_response;
use stoch_align::kalman::{alpha_schedule, compare_with_dense};
use stoch_align::policy::PolicySpec;
use stoch_align::sim::{run, run_paired, sweep_argmin, sweep_rho, RunPlan};

use crate::config::{self, FileConfig, Resolved};
use crate::output::{num, opt, write_sidecar, Csv};
use crate::CliError;

const KALMAN_TOLERANCE: f64 = 1e-9;
const SHIFT_STRETCH_TOLERANCE: f64 = 1e-9;
const SHIFT_MOVE_TOLERANCE: f64 = 1e-12;

fn lib_err(e: stoch_align::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn simulate(file: FileConfig, threads: Option<usize>) -> Result<(), CliError> {
    let cfg = Resolved::from_file(file, "simulate.csv")?;
    let model = cfg.model()?;
    let policy = config::policy(&cfg.policy, cfg.rho)?;
    let mut plan = RunPlan::new(model, policy.clone(), cfg.replications);
    plan.threads = threads;
    let rows = run(&plan).map_err(lib_err)?;

    let mut csv = Csv::new(&["round", "var_stretch", "mean_abs_stretch", "stderr"]);
    for r in &rows {
        csv.row(&[
            r.round.to_string(),
            num(r.var_stretch),
            num(r.mean_abs_stretch),
            num(r.std_error),
        ]);
    }
    csv.write(&cfg.out)?;
    write_sidecar(&cfg)?;

    let last = rows.last().expect("round 0 is always recorded");
    println!(
        "{policy}: round {} var_stretch {} mean_abs_stretch {} (stderr {})",
        last.round,
        num(last.var_stretch),
        num(last.mean_abs_stretch),
        num(last.std_error)
    );
    match policy {
        PolicySpec::Weighted(rho) => {
            let p = predict(rho, &model);
            println!(
                "closed form: var_limit {} cost_limit {}",
                num(p.var_limit),
                num(p.cost_limit)
            );
        }
        _ => {
            let alpha = alpha_schedule(&model, model.horizon).alpha(model.horizon);
            println!("closed form: var at round {} is alpha = {}", model.horizon, num(alpha));
        }
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

pub fn compare(mut file: FileConfig, threads: Option<usize>) -> Result<(), CliError> {
    file.policy_b.get_or_insert_with(|| "matc".into());
    let cfg = Resolved::from_file(file, "compare.csv")?;
    let model = cfg.model()?;
    let a = config::policy(&cfg.policy, cfg.rho)?;
    let b = config::policy(cfg.policy_b.as_deref().unwrap_or("matc"), cfg.rho_b)?;

    // The shift-equivalence check is stated for (W★, MatC); the reverse
    // order runs that pair and mirrors the columns.
    let checked = matches!((&a, &b), (PolicySpec::WStar, PolicySpec::MeetAtCenter));
    let mirrored = matches!((&a, &b), (PolicySpec::MeetAtCenter, PolicySpec::WStar));
    let mut rows = if mirrored {
        run_paired(&model, &b, &a, cfg.replications, threads).map_err(lib_err)?
    } else {
        run_paired(&model, &a, &b, cfg.replications, threads).map_err(lib_err)?
    };
    if mirrored {
        for r in &mut rows {
            std::mem::swap(&mut r.com_a, &mut r.com_b);
            r.move_shift = r.move_shift.map(|s| -s);
        }
    }

    let mut csv = Csv::new(&["round", "com_a", "com_b", "max_stretch_diff", "move_shift"]);
    for r in &rows {
        csv.row(&[
            r.round.to_string(),
            num(r.com_a),
            num(r.com_b),
            num(r.max_stretch_diff),
            opt(r.move_shift),
        ]);
    }
    csv.write(&cfg.out)?;
    write_sidecar(&cfg)?;

    let worst =
        |f: &dyn Fn(&stoch_align::sim::PairedRound) -> Option<f64>| rows.iter().filter_map(f).fold(0.0, f64::max);
    let diff = worst(&|r| Some(r.max_stretch_diff));
    let spread = worst(&|r| r.max_shift_spread);
    let lambda = worst(&|r| r.max_lambda_error);
    println!(
        "{a} vs {b}: max stretch diff {}, max spread of move differences {}",
        num(diff),
        num(spread)
    );
    println!("wrote {}", cfg.out.display());
    if checked || mirrored {
        println!("max |move shift - lambda_t| {}", num(lambda));
        let ok = diff <= SHIFT_STRETCH_TOLERANCE && spread <= SHIFT_MOVE_TOLERANCE && lambda <= SHIFT_MOVE_TOLERANCE;
        if ok {
            println!("shift equivalence: PASS");
        } else {
            return Err(CliError::Assert(format!(
                "shift equivalence: FAIL (stretch diff {}, spread {}, lambda error {})",
                num(diff),
                num(spread),
                num(lambda)
            )));
        }
    }
    Ok(())
}

pub fn sweep(file: FileConfig, threads: Option<usize>) -> Result<(), CliError> {
    let cfg = Resolved::from_file(file, "sweep.csv")?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let rows = sweep_rho(&model, &grid, cfg.replications, threads).map_err(lib_err)?;

    let mut csv = Csv::new(&["rho", "var_empirical", "var_closed_form"]);
    for r in &rows {
        let emp = if r.divergent {
            "divergent".to_string()
        } else {
            num(r.var_empirical)
        };
        csv.row(&[num(r.rho), emp, num(r.var_closed_form)]);
    }
    csv.write(&cfg.out)?;
    write_sidecar(&cfg)?;

    let star = rho_star_const(&model);
    match sweep_argmin(&rows) {
        Some(best) => {
            let within = (best.rho - star).abs() <= cfg.grid_step + 1e-12;
            println!(
                "empirical argmin rho {} (var {}), rho_star {}, within one step: {}",
                num(best.rho),
                num(best.var_empirical),
                num(star),
                if within { "yes" } else { "no" }
            );
        }
        None => println!("no convergent grid point; rho_star {}", num(star)),
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

pub fn kalman_check(file: FileConfig) -> Result<(), CliError> {
    let cfg = Resolved::from_file(file, "kalman_check.csv")?;
    let model = cfg.model()?;
    let devs = compare_with_dense(&model, model.horizon).map_err(lib_err)?;

    let mut csv = Csv::new(&["t", "alpha", "rho_star", "max_deviation"]);
    for d in &devs {
        csv.row(&[d.round.to_string(), num(d.alpha), num(d.rho_star), num(d.max())]);
    }
    csv.write(&cfg.out)?;
    write_sidecar(&cfg)?;

    let worst = devs.iter().map(|d| d.max()).fold(0.0, f64::max);
    let a_inf = alpha_infty(&model);
    let last = devs.last().expect("round 0 is always checked");
    println!(
        "alpha_infinity {}, |alpha_{} - alpha_infinity| {}",
        num(a_inf),
        last.round,
        num((last.alpha - a_inf).abs())
    );
    println!("max entrywise deviation, dense vs closed form: {}", num(worst));
    println!("wrote {}", cfg.out.display());
    if worst <= KALMAN_TOLERANCE {
        println!("kalman check: PASS");
        Ok(())
    } else {
        Err(CliError::Assert(format!(
            "kalman check: FAIL (deviation {} > {})",
            num(worst),
            num(KALMAN_TOLERANCE)
        )))
    }
}

pub fn best_response(file: FileConfig, assert_nash: bool, tolerance: f64) -> Result<(), CliError> {
    let cfg = Resolved::from_file(file, "best_response.csv")?;
    let model = cfg.model()?;
    let t_max = model.horizon;
    let (opp, wstar) = match config::policy(&cfg.policy, cfg.rho)? {
        PolicySpec::WStar => (alpha_schedule(&model, t_max).rhos().to_vec(), true),
        PolicySpec::Weighted(rho) => (vec![rho; t_max + 1], false),
        other => {
            return Err(CliError::Usage(format!(
                "opponents must run a weighted-average schedule (wstar or weighted), got {other}"
            )))
        }
    };
    let br = compute_best_response(&opp, &model, t_max).map_err(lib_err)?;

    let mut csv = Csv::new(&["t", "opp_rho", "best_response", "residual"]);
    let mut worst: f64 = 0.0;
    for (t, (&o, &b)) in opp.iter().zip(&br.responsiveness).enumerate() {
        let residual = (b - o).abs();
        worst = worst.max(residual);
        csv.row(&[t.to_string(), num(o), num(b), num(residual)]);
    }
    csv.write(&cfg.out)?;
    write_sidecar(&cfg)?;

    println!("max residual over rounds 0..={t_max}: {}", num(worst));
    println!("wrote {}", cfg.out.display());
    if wstar || assert_nash {
        if worst <= tolerance {
            println!("nash fixed point: PASS");
        } else {
            return Err(CliError::Assert(format!(
                "nash fixed point: FAIL (residual {} > {})",
                num(worst),
                num(tolerance)
            )));
        }
    }
    Ok(())
}
