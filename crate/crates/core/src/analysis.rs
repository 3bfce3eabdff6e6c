//! Closed-form predictions for weighted-average dynamics.

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::Scalar;

/// Limiting behaviour of `W(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStatePrediction<T> {
    pub rho: T,
    /// Limiting stretch variance, `+∞` when the dynamics do not settle.
    pub var_limit: T,
    /// Limiting `E|stretch|`, `√(2 var / π)`.
    pub cost_limit: T,
}

pub fn predict<T: Scalar>(rho: T, cfg: &ModelConfig<T>) -> SteadyStatePrediction<T> {
    let var = var_limit(rho, cfg);
    SteadyStatePrediction {
        rho,
        var_limit: var,
        cost_limit: cost_from_variance(var).expect("variance is non-negative"),
    }
}

/// Limiting stretch variance when every agent runs `W(ρ)`:
///
/// `(n/(n−1))(ρ²σm² + σd²) / (1 − (1 − (n/(n−1))ρ)²)`
///
/// Returns `+∞` whenever the denominator is not positive, which covers
/// `ρ = 0` (drift accumulates) and `ρ = 1, n = 2` (the two agents swap).
pub fn var_limit<T: Scalar>(rho: T, cfg: &ModelConfig<T>) -> T {
    let f = cfg.stretch_factor();
    let num = f * (rho * rho * cfg.sigma_m * cfg.sigma_m + cfg.sigma_d * cfg.sigma_d);
    let carry = T::one() - f * rho;
    let den = T::one() - carry * carry;
    if den > T::zero() {
        num / den
    } else {
        T::infinity()
    }
}

/// Variance of the stretch round by round when every agent uses
/// responsiveness `rho(t)` at round `t`, starting from the initial stretch
/// variance `(n/(n−1))σ0²`. Entry `t` is the variance at round `t`.
pub fn variance_trajectory<T: Scalar>(cfg: &ModelConfig<T>, rounds: usize, rho: impl Fn(usize) -> T) -> Vec<T> {
    let f = cfg.stretch_factor();
    let (sm2, sd2) = (cfg.sigma_m * cfg.sigma_m, cfg.sigma_d * cfg.sigma_d);
    let mut out = Vec::with_capacity(rounds + 1);
    let mut v = f * cfg.sigma0 * cfg.sigma0;
    out.push(v);
    for t in 0..rounds {
        let r = rho(t);
        let carry = T::one() - f * r;
        v = carry * carry * v + f * (r * r * sm2 + sd2);
        out.push(v);
    }
    out
}

/// The constant responsiveness minimizing [`var_limit`].
///
/// Evaluated as `2σd² / (σd√(4σm² + ((n/(n−1))σd)²) + (n/(n−1))σd²)`, the
/// rationalized form of `(σd√(…) − (n/(n−1))σd²) / (2σm²)`, which stays
/// accurate when `σm ≪ σd`.
pub fn rho_star_const<T: Scalar>(cfg: &ModelConfig<T>) -> T {
    rho_star_with(cfg.stretch_factor(), cfg.sigma_m, cfg.sigma_d)
}

/// [`rho_star_const`] with `n/(n−1)` replaced by its large-group limit 1.
pub fn rho_star_large_n<T: Scalar>(sigma_m: T, sigma_d: T) -> T {
    rho_star_with(T::one(), sigma_m, sigma_d)
}

fn rho_star_with<T: Scalar>(f: T, sigma_m: T, sigma_d: T) -> T {
    let two = T::lit(2.0);
    let sd2 = sigma_d * sigma_d;
    let root = sigma_d * (T::lit(4.0) * sigma_m * sigma_m + f * f * sd2).sqrt();
    two * sd2 / (root + f * sd2)
}

/// Minimal limiting variance for large groups: `½σd(√(4σm² + σd²) + σd)`.
pub fn var_star_large_n<T: Scalar>(sigma_m: T, sigma_d: T) -> T {
    let half = T::lit(0.5);
    half * sigma_d * ((T::lit(4.0) * sigma_m * sigma_m + sigma_d * sigma_d).sqrt() + sigma_d)
}

/// Limit of the filter sequence `α_t`:
/// `½(σd√(4σm² + ((n/(n−1))σd)²) + (n/(n−1))σd²)`.
pub fn alpha_infty<T: Scalar>(cfg: &ModelConfig<T>) -> T {
    let f = cfg.stretch_factor();
    let sd2 = cfg.sigma_d * cfg.sigma_d;
    let root = cfg.sigma_d * (T::lit(4.0) * cfg.sigma_m * cfg.sigma_m + f * f * sd2).sqrt();
    T::lit(0.5) * (root + f * sd2)
}

/// Mean absolute value of a centred Gaussian with variance `v`.
pub fn cost_from_variance<T: Scalar>(v: T) -> Result<T> {
    if v < T::zero() || v.is_nan() {
        return Err(Error::Argument(format!("variance must be non-negative, got {v}")));
    }
    Ok((T::lit(2.0) * v / T::PI()).sqrt())
}
