use crate::model::ModelConfig;
use crate::Scalar;

/// One round of the one-dimensional filter tracking a single agent's
/// stretch while every other agent plays responsiveness `rho_opp`.
///
/// Returns the gain `P⁻/(P⁻ + σm²)` and the next prior variance
/// `(1 − ρ/(n−1))² P⁻σm²/(P⁻ + σm²) + (ρ²σm² + σd²)/(n−1) + σd²`.
pub fn scalar_filter_step<T: Scalar>(p_pre: T, rho_opp: T, cfg: &ModelConfig<T>) -> (T, T) {
    debug_assert!(p_pre >= T::zero());
    let sm2 = cfg.sigma_m * cfg.sigma_m;
    let sd2 = cfg.sigma_d * cfg.sigma_d;
    let others = T::count(cfg.n - 1);
    let k = p_pre / (p_pre + sm2);
    let carry = T::one() - rho_opp / others;
    let p_next = carry * carry * p_pre * sm2 / (p_pre + sm2) + (rho_opp * rho_opp * sm2 + sd2) / others + sd2;
    (k, p_next)
}
