//! Experiment configuration: JSON file, command-line overrides, defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stoch_align::model::ModelConfig;
use stoch_align::policy::PolicySpec;

use crate::CliError;

pub const DEFAULT_N: usize = 3;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_HORIZON: usize = 100;
pub const DEFAULT_REPLICATIONS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_POLICY: &str = "wstar";
pub const DEFAULT_GRID: (f64, f64, f64) = (0.02, 1.0, 0.02);

/// Every key a config file may set. Missing keys fall back to flags, then
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub sigma0: Option<f64>,
    pub sigma_m: Option<f64>,
    pub sigma_d: Option<f64>,
    pub horizon: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub policy: Option<String>,
    pub rho: Option<f64>,
    /// Second policy of `compare`.
    pub policy_b: Option<String>,
    pub rho_b: Option<f64>,
    pub grid_start: Option<f64>,
    pub grid_stop: Option<f64>,
    pub grid_step: Option<f64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: FileConfig) -> FileConfig {
        FileConfig {
            n: over.n.or(self.n),
            sigma0: over.sigma0.or(self.sigma0),
            sigma_m: over.sigma_m.or(self.sigma_m),
            sigma_d: over.sigma_d.or(self.sigma_d),
            horizon: over.horizon.or(self.horizon),
            replications: over.replications.or(self.replications),
            seed: over.seed.or(self.seed),
            policy: over.policy.or(self.policy),
            rho: over.rho.or(self.rho),
            policy_b: over.policy_b.or(self.policy_b),
            rho_b: over.rho_b.or(self.rho_b),
            grid_start: over.grid_start.or(self.grid_start),
            grid_stop: over.grid_stop.or(self.grid_stop),
            grid_step: over.grid_step.or(self.grid_step),
            out: over.out.or(self.out),
        }
    }
}

/// A configuration with every field decided. Serialized as the sidecar, it
/// is itself a valid config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub n: usize,
    pub sigma0: f64,
    pub sigma_m: f64,
    pub sigma_d: f64,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub policy: String,
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy_b: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_b: Option<f64>,
    pub grid_start: f64,
    pub grid_stop: f64,
    pub grid_step: f64,
    pub out: PathBuf,
}

impl Resolved {
    pub fn from_file(c: FileConfig, default_out: &str) -> Result<Self, CliError> {
        let (gs, ge, gd) = DEFAULT_GRID;
        let r = Resolved {
            n: c.n.unwrap_or(DEFAULT_N),
            sigma0: c.sigma0.unwrap_or(DEFAULT_SIGMA),
            sigma_m: c.sigma_m.unwrap_or(DEFAULT_SIGMA),
            sigma_d: c.sigma_d.unwrap_or(DEFAULT_SIGMA),
            horizon: c.horizon.unwrap_or(DEFAULT_HORIZON),
            replications: c.replications.unwrap_or(DEFAULT_REPLICATIONS),
            seed: c.seed.unwrap_or(DEFAULT_SEED),
            policy: c.policy.unwrap_or_else(|| DEFAULT_POLICY.into()),
            rho: c.rho,
            policy_b: c.policy_b,
            rho_b: c.rho_b,
            grid_start: c.grid_start.unwrap_or(gs),
            grid_stop: c.grid_stop.unwrap_or(ge),
            grid_step: c.grid_step.unwrap_or(gd),
            out: c.out.unwrap_or_else(|| PathBuf::from(default_out)),
        };
        r.model()?;
        for rho in [r.rho, r.rho_b].into_iter().flatten() {
            check_rho(rho)?;
        }
        if r.replications == 0 {
            return Err(CliError::Usage("replications must be at least 1".into()));
        }
        Ok(r)
    }

    pub fn model(&self) -> Result<ModelConfig<f64>, CliError> {
        ModelConfig::new(self.n, self.sigma0, self.sigma_m, self.sigma_d, self.horizon, self.seed)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    /// The grid `start, start + step, …` up to `stop`.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let (start, stop, step) = (self.grid_start, self.grid_stop, self.grid_step);
        if !(step > 0.0 && step.is_finite()) {
            return Err(CliError::Usage(format!("grid_step must be positive, got {step}")));
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) || start > stop {
            return Err(CliError::Usage(format!(
                "grid must satisfy 0 <= grid_start <= grid_stop <= 1 (rho lies in [0,1]), got {start}..{stop}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        // rounding to 12 decimals keeps 0.3 from printing as 0.30000000000000004
        Ok((0..=count)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect())
    }

    /// Sidecar path: `run.csv` gives `run.config.json`.
    pub fn sidecar_path(&self) -> PathBuf {
        let stem = self
            .out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        self.out.with_file_name(format!("{stem}.config.json"))
    }
}

pub fn check_rho(rho: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("rho must lie in [0,1], got {rho}")))
    }
}

/// Parses a policy name. `weighted` needs a responsiveness.
pub fn policy(name: &str, rho: Option<f64>) -> Result<PolicySpec<f64>, CliError> {
    match name {
        "wstar" | "w-star" => Ok(PolicySpec::WStar),
        "matc" | "meet-at-center" => Ok(PolicySpec::MeetAtCenter),
        "weighted" => match rho {
            Some(r) => check_rho(r).map(|_| PolicySpec::Weighted(r)),
            None => Err(CliError::Usage("policy weighted needs --rho in [0,1]".into())),
        },
        other => Err(CliError::Usage(format!(
            "unknown policy {other:?} (expected weighted, wstar or matc)"
        ))),
    }
}
