//! Ground-truth dynamics: positions, stretches, measurements, moves, drift.

use crate::error::{check_len, Error, Result};
use crate::rng::{NoiseKind, NoiseSource};
use crate::Scalar;

/// A problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig<T> {
    /// Number of agents, at least 2.
    pub n: usize,
    /// Std-dev of the initial positions. Zero is accepted and starts every
    /// agent at the origin.
    pub sigma0: T,
    /// Measurement-noise std-dev, strictly positive.
    pub sigma_m: T,
    /// Drift std-dev, strictly positive.
    pub sigma_d: T,
    /// Number of rounds to run.
    pub horizon: usize,
    pub seed: u64,
}

impl<T: Scalar> ModelConfig<T> {
    pub fn new(n: usize, sigma0: T, sigma_m: T, sigma_d: T, horizon: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            n,
            sigma0,
            sigma_m,
            sigma_d,
            horizon,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.sigma0 >= T::zero() && self.sigma0.is_finite()) {
            return Err(Error::Config(format!(
                "sigma0 must be finite and >= 0, got {}",
                self.sigma0
            )));
        }
        if !(self.sigma_m > T::zero() && self.sigma_m.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_m must be finite and > 0, got {}",
                self.sigma_m
            )));
        }
        if !(self.sigma_d > T::zero() && self.sigma_d.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_d must be finite and > 0, got {}",
                self.sigma_d
            )));
        }
        Ok(())
    }

    /// `n / (n - 1)`, the factor that turns a per-agent variance into the
    /// variance of a stretch.
    #[inline]
    pub fn stretch_factor(&self) -> T {
        T::count(self.n) / T::count(self.n - 1)
    }
}

/// Positions of all agents at the start of a round.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState<T> {
    pub round: usize,
    pub positions: Vec<T>,
}

impl<T: Scalar> WorldState<T> {
    pub fn new(positions: Vec<T>) -> Self {
        Self { round: 0, positions }
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Average position of the whole group.
    pub fn center_of_mass(&self) -> T {
        self.positions.iter().copied().sum::<T>() / T::count(self.n())
    }
}

/// One noisy stretch measurement per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector<T> {
    pub values: Vec<T>,
}

/// One move per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveVector<T> {
    pub values: Vec<T>,
}

impl<T: Scalar> MoveVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![T::zero(); n],
        }
    }
}

/// Draws every position independently from N(0, sigma0²).
pub fn init_world<T: Scalar, R: NoiseSource>(cfg: &ModelConfig<T>, rng: &mut R) -> WorldState<T> {
    let positions = (0..cfg.n)
        .map(|i| cfg.sigma0 * rng.standard_normal::<T>(NoiseKind::Init, i))
        .collect();
    WorldState::new(positions)
}

/// Writes the stretch of every agent: the mean of the others minus its own
/// position.
pub fn stretch_into<T: Scalar>(positions: &[T], out: &mut [T]) {
    let n = positions.len();
    debug_assert_eq!(out.len(), n);
    let total: T = positions.iter().copied().sum();
    let others = T::count(n - 1);
    for (s, &p) in out.iter_mut().zip(positions) {
        *s = (total - p) / others - p;
    }
}

pub fn stretch<T: Scalar>(w: &WorldState<T>) -> Vec<T> {
    let mut out = vec![T::zero(); w.n()];
    stretch_into(&w.positions, &mut out);
    out
}

/// `Y_i = stretch_i + sigma_m * noise_i` for a given standard-normal
/// realization.
pub fn measure_with_noise<T: Scalar>(
    w: &WorldState<T>,
    cfg: &ModelConfig<T>,
    noise: &[T],
) -> Result<MeasurementVector<T>> {
    check_len(w.n(), noise.len())?;
    let mut values = stretch(w);
    for (y, &z) in values.iter_mut().zip(noise) {
        *y = *y + cfg.sigma_m * z;
    }
    Ok(MeasurementVector { values })
}

pub fn measure<T: Scalar, R: NoiseSource>(
    w: &WorldState<T>,
    cfg: &ModelConfig<T>,
    rng: &mut R,
) -> MeasurementVector<T> {
    let noise: Vec<T> = (0..w.n())
        .map(|i| rng.standard_normal(NoiseKind::Measurement, i))
        .collect();
    measure_with_noise(w, cfg, &noise).expect("noise length matches")
}

/// Applies the moves and a given drift realization (already scaled by
/// sigma_d).
pub fn step_with_drift<T: Scalar>(w: &WorldState<T>, moves: &MoveVector<T>, drift: &[T]) -> Result<WorldState<T>> {
    check_len(w.n(), moves.values.len()).map_err(config_mismatch)?;
    check_len(w.n(), drift.len()).map_err(config_mismatch)?;
    let positions = w
        .positions
        .iter()
        .zip(&moves.values)
        .zip(drift)
        .map(|((&p, &m), &d)| p + m + d)
        .collect();
    Ok(WorldState {
        round: w.round + 1,
        positions,
    })
}

pub fn step<T: Scalar, R: NoiseSource>(
    w: &WorldState<T>,
    moves: &MoveVector<T>,
    cfg: &ModelConfig<T>,
    rng: &mut R,
) -> Result<WorldState<T>> {
    check_len(w.n(), moves.values.len()).map_err(config_mismatch)?;
    let drift: Vec<T> = (0..w.n())
        .map(|i| cfg.sigma_d * rng.standard_normal::<T>(NoiseKind::Drift, i))
        .collect();
    step_with_drift(w, moves, &drift)
}

fn config_mismatch(e: Error) -> Error {
    match e {
        Error::Dimension { expected, found } => {
            Error::Config(format!("move vector has {found} entries, world has {expected} agents"))
        }
        other => other,
    }
}

/// Advances a stretch vector directly, without going through positions:
/// each agent loses its own move and drift and gains the average move and
/// drift of the others.
pub fn stretch_update<T: Scalar>(stretch: &[T], moves: &[T], drift: &[T]) -> Result<Vec<T>> {
    let n = stretch.len();
    check_len(n, moves.len())?;
    check_len(n, drift.len())?;
    let others = T::count(n - 1);
    Ok((0..n)
        .map(|i| {
            let mut inflow = T::zero();
            for j in (0..n).filter(|&j| j != i) {
                inflow = inflow + moves[j] + drift[j];
            }
            stretch[i] - moves[i] - drift[i] + inflow / others
        })
        .collect())
}

/// Mean absolute value of a set of stretch samples.
pub fn cost_estimate<T: Scalar>(samples: &[T]) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::Argument("cost estimate needs at least one sample".into()));
    }
    Ok(samples.iter().map(|x| x.abs()).sum::<T>() / T::count(samples.len()))
}
