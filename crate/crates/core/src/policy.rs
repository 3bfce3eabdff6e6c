//! Alignment policies: measurements in, moves out.

use std::fmt;

use crate::error::{check_len, Error, Result};
use crate::kalman::AlphaSchedule;
use crate::matrix::mn;
use crate::model::{MeasurementVector, MoveVector};
use crate::Scalar;

/// How a shifted policy chooses its common translation `λ_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftRule<T> {
    /// The same `λ` every round.
    Constant(T),
    /// `λ_t = (1/n) ρ★(t) Σ_i Y_i`, the shift taking meet-at-the-center to W★.
    MeasurementMean,
}

/// The rule an agent (or the whole group) runs.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec<T> {
    /// `W(ρ)`: `dθ_i = ρ Y_i` with a constant `ρ ∈ [0, 1]`.
    Weighted(T),
    /// `W(ρ(t))` for an explicit schedule, one entry per round.
    Scheduled(Vec<T>),
    /// `W★ = W(ρ★(t))`.
    WStar,
    /// Meet at the center: every agent moves to its estimate of the center of
    /// mass, `dθ = −((n−1)/n) ρ★(t) M_n Y`.
    MeetAtCenter,
    /// A base policy plus the same shift for every agent.
    Shifted(Box<PolicySpec<T>>, ShiftRule<T>),
}

impl<T: Scalar> PolicySpec<T> {
    /// Checks parameters and that the policy defines a move for every round
    /// before `horizon`.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        match self {
            Self::Weighted(rho) => check_rho(*rho),
            Self::Scheduled(rhos) if rhos.len() < horizon => Err(Error::Config(format!(
                "schedule has {} entries, the horizon needs {horizon}",
                rhos.len()
            ))),
            Self::Scheduled(rhos) => match rhos.iter().find(|r| !r.is_finite()) {
                Some(r) => Err(Error::Config(format!("schedule entry {r} is not finite"))),
                None => Ok(()),
            },
            Self::WStar | Self::MeetAtCenter => Ok(()),
            Self::Shifted(base, rule) => {
                if let ShiftRule::Constant(l) = rule {
                    if !l.is_finite() {
                        return Err(Error::Config(format!("shift {l} is not finite")));
                    }
                }
                base.validate(horizon)
            }
        }
    }

    /// Writes the moves for round `t` into `out`.
    pub fn fill_moves(&self, y: &[T], t: usize, sched: &AlphaSchedule<T>, out: &mut [T]) -> Result<()> {
        check_len(y.len(), out.len())?;
        match self {
            Self::Weighted(rho) => {
                check_rho(*rho)?;
                scale_into(y, *rho, out);
            }
            Self::Scheduled(rhos) => {
                let rho = *rhos.get(t).ok_or_else(|| {
                    Error::Argument(format!("schedule has no entry for round {t} (length {})", rhos.len()))
                })?;
                scale_into(y, rho, out);
            }
            Self::WStar => scale_into(y, sched.rho_star(t), out),
            Self::MeetAtCenter => {
                let n = y.len();
                let k = -(T::count(n - 1) / T::count(n)) * sched.rho_star(t);
                mn::<T>(n)?.scale(k).apply_into(y, out);
            }
            Self::Shifted(base, rule) => {
                base.fill_moves(y, t, sched, out)?;
                let lambda = match rule {
                    ShiftRule::Constant(l) => *l,
                    ShiftRule::MeasurementMean => wstar_matc_shift(y, t, sched),
                };
                out.iter_mut().for_each(|m| *m = *m + lambda);
            }
        }
        Ok(())
    }

    pub fn moves(&self, y: &MeasurementVector<T>, t: usize, sched: &AlphaSchedule<T>) -> Result<MoveVector<T>> {
        let mut values = vec![T::zero(); y.values.len()];
        self.fill_moves(&y.values, t, sched, &mut values)?;
        Ok(MoveVector { values })
    }
}

impl<T: Scalar> fmt::Display for PolicySpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Weighted(rho) => write!(f, "weighted({rho})"),
            Self::Scheduled(rhos) => write!(f, "scheduled[{}]", rhos.len()),
            Self::WStar => f.write_str("wstar"),
            Self::MeetAtCenter => f.write_str("matc"),
            Self::Shifted(base, ShiftRule::Constant(l)) => write!(f, "{base}+{l}"),
            Self::Shifted(base, ShiftRule::MeasurementMean) => write!(f, "{base}+lambda"),
        }
    }
}

/// A group policy with optionally one agent running something else.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyProfile<T> {
    pub group: PolicySpec<T>,
    pub deviant: Option<(usize, PolicySpec<T>)>,
}

impl<T: Scalar> PolicyProfile<T> {
    pub fn uniform(policy: PolicySpec<T>) -> Self {
        Self {
            group: policy,
            deviant: None,
        }
    }

    pub fn with_deviant(group: PolicySpec<T>, agent: usize, policy: PolicySpec<T>) -> Self {
        Self {
            group,
            deviant: Some((agent, policy)),
        }
    }

    pub fn validate(&self, n: usize, horizon: usize) -> Result<()> {
        self.group.validate(horizon)?;
        if let Some((agent, policy)) = &self.deviant {
            if *agent >= n {
                return Err(Error::Config(format!("deviant agent {agent} out of range for n = {n}")));
            }
            policy.validate(horizon)?;
        }
        Ok(())
    }

    /// Group moves, with the deviant's coordinate overwritten. `scratch` must
    /// have the same length as `y`.
    pub fn fill_moves(
        &self,
        y: &[T],
        t: usize,
        sched: &AlphaSchedule<T>,
        out: &mut [T],
        scratch: &mut [T],
    ) -> Result<()> {
        self.group.fill_moves(y, t, sched, out)?;
        if let Some((agent, policy)) = &self.deviant {
            policy.fill_moves(y, t, sched, scratch)?;
            out[*agent] = scratch[*agent];
        }
        Ok(())
    }
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if rho >= T::zero() && rho <= T::one() {
        Ok(())
    } else {
        Err(Error::Argument(format!("responsiveness must lie in [0,1], got {rho}")))
    }
}

fn scale_into<T: Scalar>(y: &[T], k: T, out: &mut [T]) {
    for (m, &v) in out.iter_mut().zip(y) {
        *m = k * v;
    }
}

/// `dθ_i = ρ Y_i`.
pub fn weighted_moves<T: Scalar>(y: &MeasurementVector<T>, rho: T) -> Result<MoveVector<T>> {
    check_rho(rho)?;
    let mut values = vec![T::zero(); y.values.len()];
    scale_into(&y.values, rho, &mut values);
    Ok(MoveVector { values })
}

/// `dθ_i = ρ★(t) Y_i`.
pub fn wstar_moves<T: Scalar>(y: &MeasurementVector<T>, t: usize, sched: &AlphaSchedule<T>) -> MoveVector<T> {
    let mut values = vec![T::zero(); y.values.len()];
    scale_into(&y.values, sched.rho_star(t), &mut values);
    MoveVector { values }
}

/// Meet at the center: `dθ_i = ((n−1)/n) ρ★(t) (Y_i − (1/(n−1)) Σ_{j≠i} Y_j)`.
pub fn matc_moves<T: Scalar>(y: &MeasurementVector<T>, t: usize, sched: &AlphaSchedule<T>) -> Result<MoveVector<T>> {
    PolicySpec::MeetAtCenter.moves(y, t, sched)
}

/// Adds `lambda` to every move.
pub fn shifted_moves<T: Scalar>(base: &MoveVector<T>, lambda: T) -> MoveVector<T> {
    MoveVector {
        values: base.values.iter().map(|&m| m + lambda).collect(),
    }
}

/// `λ_t = (1/n) ρ★(t) Σ_i Y_i`, so that W★ moves are meet-at-the-center
/// moves plus `λ_t`.
pub fn wstar_matc_shift<T: Scalar>(y: &[T], t: usize, sched: &AlphaSchedule<T>) -> T {
    sched.rho_star(t) * y.iter().copied().sum::<T>() / T::count(y.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kalman::alpha_schedule;
    use crate::model::ModelConfig;
    use proptest::prelude::*;

    fn ys(v: &[f64]) -> MeasurementVector<f64> {
        MeasurementVector { values: v.to_vec() }
    }

    fn sched(n: usize, sigma0: f64) -> AlphaSchedule<f64> {
        alpha_schedule(&ModelConfig::new(n, sigma0, 1.0, 1.0, 0, 0).unwrap(), 10)
    }

    /// The per-agent form of meet at the center, written out from its
    /// definition.
    fn matc_by_hand(y: &[f64], rho: f64) -> Vec<f64> {
        let n = y.len() as f64;
        (0..y.len())
            .map(|i| {
                let others: f64 = y.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
                (n - 1.0) / n * rho * (y[i] - others / (n - 1.0))
            })
            .collect()
    }

    #[test]
    fn weighted_examples() {
        let y = ys(&[2.0, -2.0, 0.5]);
        assert_eq!(weighted_moves(&y, 0.0).unwrap().values, vec![0.0; 3]);
        assert_eq!(weighted_moves(&y, 1.0).unwrap().values, y.values);
        assert_eq!(weighted_moves(&ys(&[2.0, -2.0]), 0.5).unwrap().values, vec![1.0, -1.0]);
        for bad in [-0.1, 1.5, f64::NAN] {
            let msg = weighted_moves(&y, bad).unwrap_err().to_string();
            assert!(msg.contains("[0,1]"), "{msg}");
        }
    }

    #[test]
    fn wstar_examples() {
        let s = sched(2, 1.0);
        assert_eq!(s.rho_star(0), 0.4);
        let m = wstar_moves(&ys(&[1.0, -1.0]), 0, &s).values;
        assert!((m[0] - 0.4).abs() < 1e-15 && (m[1] + 0.4).abs() < 1e-15);
        assert_eq!(wstar_moves(&ys(&[1.0, 3.0]), 0, &sched(2, 0.0)).values, vec![0.0, 0.0]);
        // past the cached horizon the schedule is extended on the fly
        let far = wstar_moves(&ys(&[1.0, -1.0]), 500, &s).values;
        let lim = crate::analysis::rho_star_const(s.config());
        assert!((far[0] - lim).abs() < 1e-12);
    }

    #[test]
    fn matc_examples() {
        let s = sched(3, 1.0);
        let m = matc_moves(&ys(&[0.7, 0.7, 0.7]), 2, &s).unwrap().values;
        assert!(m.iter().all(|v| v.abs() < 1e-15));

        let s2 = sched(2, 1.0);
        for t in 0..4 {
            let r = s2.rho_star(t);
            let m = matc_moves(&ys(&[1.0, -1.0]), t, &s2).unwrap().values;
            assert!((m[0] - r).abs() < 1e-15 && (m[1] + r).abs() < 1e-15);
        }
    }

    #[test]
    fn matc_is_wstar_minus_lambda() {
        let s = sched(4, 1.0);
        let y = ys(&[0.3, -1.2, 2.0, 0.05]);
        for t in 0..5 {
            let w = wstar_moves(&y, t, &s);
            let m = matc_moves(&y, t, &s).unwrap();
            let back = shifted_moves(&m, wstar_matc_shift(&y.values, t, &s));
            for (a, b) in w.values.iter().zip(&back.values) {
                assert!((a - b).abs() < 1e-15);
            }
            let spec = PolicySpec::Shifted(Box::new(PolicySpec::MeetAtCenter), ShiftRule::MeasurementMean);
            assert_eq!(spec.moves(&y, t, &s).unwrap().values, back.values);
        }
    }

    #[test]
    fn shift_examples() {
        let base = MoveVector {
            values: vec![1.0, -2.0],
        };
        assert_eq!(shifted_moves(&base, 0.0), base);
        assert_eq!(shifted_moves(&base, 0.5).values, vec![1.5, -1.5]);
    }

    #[test]
    fn schedules_and_profiles() {
        let s = sched(3, 1.0);
        let spec = PolicySpec::Scheduled(vec![0.1, 0.2]);
        assert!(spec.validate(2).is_ok());
        assert!(matches!(spec.validate(3), Err(Error::Config(_))));
        assert_eq!(
            spec.moves(&ys(&[1.0, 2.0, 3.0]), 1, &s).unwrap().values,
            vec![0.2, 0.4, 0.6000000000000001]
        );
        assert!(spec.moves(&ys(&[1.0, 2.0, 3.0]), 2, &s).is_err());
        assert!(PolicySpec::Weighted(1.2).validate(0).is_err());

        let p = PolicyProfile::with_deviant(PolicySpec::Weighted(0.5), 1, PolicySpec::Weighted(0.0));
        let (mut out, mut scratch) = (vec![0.0; 3], vec![0.0; 3]);
        p.fill_moves(&[2.0, 2.0, 2.0], 0, &s, &mut out, &mut scratch).unwrap();
        assert_eq!(out, vec![1.0, 0.0, 1.0]);
        assert!(p.validate(3, 5).is_ok());
        assert!(p.validate(1, 5).is_err());
        assert_eq!(PolicySpec::<f64>::WStar.to_string(), "wstar");
    }

    proptest! {
        #[test]
        fn weighted_is_linear(
            y1 in prop::collection::vec(-1e3..1e3f64, 5),
            y2 in prop::collection::vec(-1e3..1e3f64, 5),
            a in -4i32..4, b in -4i32..4,
            rho in prop::sample::select(vec![0.0, 0.125, 0.25, 0.5, 1.0]),
        ) {
            // integer weights and power-of-two rho keep both sides equal bit for bit
            let (a, b) = (a as f64, b as f64);
            let mix = ys(&y1.iter().zip(&y2).map(|(p, q)| a * p + b * q).collect::<Vec<_>>());
            let lhs = weighted_moves(&mix, rho).unwrap().values;
            let m1 = weighted_moves(&ys(&y1), rho).unwrap().values;
            let m2 = weighted_moves(&ys(&y2), rho).unwrap().values;
            let rhs: Vec<f64> = m1.iter().zip(&m2).map(|(p, q)| a * p + b * q).collect();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn matc_matches_per_agent_formula(y in prop::collection::vec(-10.0..10.0f64, 2..12), t in 0usize..20) {
            let s = sched(y.len(), 1.0);
            let fast = matc_moves(&ys(&y), t, &s).unwrap().values;
            let slow = matc_by_hand(&y, s.rho_star(t));
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
