//! Best responses of a single agent against a group running a weighted
//! average schedule.

use crate::error::{Error, Result};
use crate::kalman::scalar_filter_step;
use crate::model::ModelConfig;
use crate::Scalar;

/// The optimal deviation of one agent, round by round.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseSchedule<T> {
    /// Coefficient on the agent's own measurement at each round.
    pub responsiveness: Vec<T>,
    /// Prior variance of the agent's stretch at each round.
    pub p_pre: Vec<T>,
}

/// Best response for rounds `0..=t_max` when every other agent plays
/// `opp[t]` at round `t`. `opp` needs at least `t_max + 1` entries.
pub fn best_response<T: Scalar>(opp: &[T], cfg: &ModelConfig<T>, t_max: usize) -> Result<BestResponseSchedule<T>> {
    cfg.validate()?;
    if opp.len() <= t_max {
        return Err(Error::Argument(format!(
            "opponent schedule has {} entries, rounds 0..={t_max} need {}",
            opp.len(),
            t_max + 1
        )));
    }
    let others = T::count(cfg.n - 1);
    let mut p = cfg.stretch_factor() * cfg.sigma0 * cfg.sigma0;
    let mut out = BestResponseSchedule {
        responsiveness: Vec::with_capacity(t_max + 1),
        p_pre: Vec::with_capacity(t_max + 1),
    };
    for &rho in &opp[..=t_max] {
        let (k, next) = scalar_filter_step(p, rho, cfg);
        out.p_pre.push(p);
        out.responsiveness.push((T::one() - rho / others) * k);
        p = next;
    }
    Ok(out)
}

/// `max_{t ≤ t_max} |best_response(schedule)[t] − schedule[t]|`.
pub fn nash_residual<T: Scalar>(schedule: &[T], cfg: &ModelConfig<T>, t_max: usize) -> Result<T> {
    let br = best_response(schedule, cfg, t_max)?;
    Ok(br
        .responsiveness
        .iter()
        .zip(schedule)
        .map(|(&b, &s)| (b - s).abs())
        .fold(T::zero(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::rho_star_const;
    use crate::kalman::alpha_schedule;

    fn cfg(n: usize, sigma0: f64, sigma_m: f64, sigma_d: f64) -> ModelConfig<f64> {
        ModelConfig::new(n, sigma0, sigma_m, sigma_d, 0, 0).unwrap()
    }

    #[test]
    fn wstar_is_a_fixed_point() {
        for c in [
            cfg(2, 1.0, 1.0, 1.0),
            cfg(5, 0.5, 2.0, 0.3),
            cfg(30, 3.0, 0.2, 1.0),
            cfg(3, 0.0, 1.0, 1.0),
        ] {
            let s = alpha_schedule(&c, 50);
            let br = best_response(s.rhos(), &c, 50).unwrap();
            for t in 0..=50 {
                assert!((br.responsiveness[t] - s.rho_star(t)).abs() <= 1e-12, "t={t}");
                assert!((br.p_pre[t] - s.alpha(t)).abs() <= 1e-10, "t={t}");
                let p = br.p_pre[t];
                let rearranged = p / (c.stretch_factor() * p + c.sigma_m * c.sigma_m);
                assert!((rearranged - s.rho_star(t)).abs() <= 1e-12);
            }
            assert!(nash_residual(s.rhos(), &c, 50).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn hand_iteration_two_agents() {
        let c = cfg(2, 1.0, 1.0, 1.0);
        let br = best_response(&[0.5; 4], &c, 3).unwrap();
        let p = [2.0, 29.0 / 12.0, 199.0 / 82.0, 682.0 / 281.0];
        let coef = [1.0 / 3.0, 29.0 / 82.0, 199.0 / 562.0, 341.0 / 963.0];
        for t in 0..4 {
            assert!((br.p_pre[t] - p[t]).abs() < 1e-14, "p[{t}]");
            assert!((br.responsiveness[t] - coef[t]).abs() < 1e-14, "coef[{t}]");
        }
    }

    #[test]
    fn constant_optimum_is_only_asymptotically_nash() {
        let c = cfg(4, 1.0, 1.0, 1.0);
        let rho = rho_star_const(&c);
        let sched = vec![rho; 301];
        let br = best_response(&sched, &c, 300).unwrap();
        assert!((br.responsiveness[0] - rho).abs() > 1e-3);
        assert!((br.responsiveness[300] - rho).abs() < 1e-9);
        assert!(nash_residual(&sched, &c, 300).unwrap() > 1e-3);
    }

    #[test]
    fn persistent_opponents() {
        let c = cfg(1000, 1.0, 1.0, 1.0);
        let sched = vec![0.0; 201];
        let br = best_response(&sched, &c, 200).unwrap();
        // nobody else moves, so the deviant faces a random walk plus noise
        for t in 0..=200 {
            let p = br.p_pre[t];
            assert!((br.responsiveness[t] - p / (p + 1.0)).abs() < 1e-15);
            assert!(br.responsiveness[t] > 0.5);
        }
        assert!(nash_residual(&sched, &c, 200).unwrap() > 0.5);
    }

    #[test]
    fn short_schedule_is_rejected() {
        let c = cfg(3, 1.0, 1.0, 1.0);
        assert!(matches!(best_response(&[0.5; 3], &c, 3), Err(Error::Argument(_))));
        assert!(best_response(&[0.5; 4], &c, 3).is_ok());
    }
}
