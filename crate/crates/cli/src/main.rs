//! `stoch-align` command-line experiment runner.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::FileConfig;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or output path. Exit code 2.
    Usage(String),
    /// A requested check did not hold. Exit code 1.
    Assert(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Assert(m) => f.write_str(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "stoch-align", version, about = "Noisy alignment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one policy and write per-round statistics.
    Simulate(SimulateArgs),
    /// Run two policies against the same noise.
    Compare(CompareArgs),
    /// Estimate the steady-state variance of W(rho) over a grid of rho.
    Sweep(SweepArgs),
    /// Check the dense Kalman filter against the closed forms.
    KalmanCheck(KalmanArgs),
    /// Best response of one agent against a weighted-average group.
    BestResponse(BestResponseArgs),
}

/// Options shared by every subcommand. Unset flags fall back to `--config`,
/// then to built-in defaults.
#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of agents [default: 3].
    #[arg(long)]
    n: Option<usize>,
    /// Std-dev of initial positions [default: 1].
    #[arg(long)]
    sigma0: Option<f64>,
    /// Measurement-noise std-dev [default: 1].
    #[arg(long = "sigma-m")]
    sigma_m: Option<f64>,
    /// Drift std-dev [default: 1].
    #[arg(long = "sigma-d")]
    sigma_d: Option<f64>,
    /// Rounds to run [default: 100].
    #[arg(long, visible_aliases = ["rounds", "t-max"])]
    horizon: Option<usize>,
    /// Monte Carlo replications [default: 10000].
    #[arg(long, visible_alias = "reps")]
    replications: Option<usize>,
    /// Master seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV [default: <subcommand>.csv].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, env = "STOCH_ALIGN_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn file_config(&self) -> FileConfig {
        FileConfig {
            n: self.n,
            sigma0: self.sigma0,
            sigma_m: self.sigma_m,
            sigma_d: self.sigma_d,
            horizon: self.horizon,
            replications: self.replications,
            seed: self.seed,
            out: self.out.clone(),
            ..FileConfig::default()
        }
    }

    /// Config file first, then flags on top.
    fn merge(&self, flags: FileConfig) -> Result<FileConfig, CliError> {
        let base = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Ok(base.overlay(self.file_config().overlay(flags)))
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// weighted, wstar or matc [default: wstar].
    #[arg(long)]
    policy: Option<String>,
    /// Responsiveness of the weighted policy, in [0,1].
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// First policy [default: wstar].
    #[arg(long)]
    a: Option<String>,
    /// Second policy [default: matc].
    #[arg(long)]
    b: Option<String>,
    #[arg(long = "rho-a")]
    rho_a: Option<f64>,
    #[arg(long = "rho-b")]
    rho_b: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// First grid point [default: 0.02].
    #[arg(long = "grid-start")]
    grid_start: Option<f64>,
    /// Last grid point [default: 1].
    #[arg(long = "grid-stop")]
    grid_stop: Option<f64>,
    /// Grid spacing [default: 0.02].
    #[arg(long = "grid-step")]
    grid_step: Option<f64>,
}

#[derive(Args, Debug)]
struct KalmanArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BestResponseArgs {
    #[command(flatten)]
    common: Common,
    /// Opponents' schedule: wstar, or weighted with --rho [default: wstar].
    #[arg(long, visible_alias = "opponents")]
    policy: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    /// Fail unless the opponents' schedule is its own best response.
    #[arg(long = "assert-nash")]
    assert_nash: bool,
    /// Largest residual accepted as a fixed point.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => {
            let flags = FileConfig {
                policy: a.policy,
                rho: a.rho,
                ..Default::default()
            };
            commands::simulate(a.common.merge(flags)?, a.common.threads)
        }
        Command::Compare(a) => {
            let flags = FileConfig {
                policy: a.a,
                rho: a.rho_a,
                policy_b: a.b,
                rho_b: a.rho_b,
                ..Default::default()
            };
            commands::compare(a.common.merge(flags)?, a.common.threads)
        }
        Command::Sweep(a) => {
            let flags = FileConfig {
                grid_start: a.grid_start,
                grid_stop: a.grid_stop,
                grid_step: a.grid_step,
                ..Default::default()
            };
            commands::sweep(a.common.merge(flags)?, a.common.threads)
        }
        Command::KalmanCheck(a) => commands::kalman_check(a.common.merge(FileConfig::default())?),
        Command::BestResponse(a) => {
            let flags = FileConfig {
                policy: a.policy,
                rho: a.rho,
                ..Default::default()
            };
            commands::best_response(a.common.merge(flags)?, a.assert_nash, a.tolerance)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Assert(_) => ExitCode::from(1),
                CliError::Usage(_) => ExitCode::from(2),
            }
        }
    }
}
