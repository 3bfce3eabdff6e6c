use crate::dense::DenseMatrix;
use crate::error::Result;
use crate::matrix::{mn, StructuredMatrix};
use crate::model::ModelConfig;
use crate::Scalar;

use super::{alpha_schedule, gain, measurement_update, time_update, KalmanState, LinearSystem};

/// Entrywise gaps between the dense filter and the closed forms at one
/// round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundDeviation<T> {
    pub round: usize,
    pub alpha: T,
    pub rho_star: T,
    /// `P_t⁻` against `−α_t M_n`.
    pub cov_pre: T,
    /// `K_t` against `−ρ★(t) M_n`.
    pub gain: T,
    /// `P_t` against its closed form.
    pub cov_post: T,
    /// `P_{t+1}⁻` against `P_t − (n/(n−1)) σd² M_n`.
    pub next_cov_pre: T,
}

impl<T: Scalar> RoundDeviation<T> {
    pub fn max(&self) -> T {
        self.cov_pre.max(self.gain).max(self.cov_post).max(self.next_cov_pre)
    }
}

fn gap<T: Scalar>(d: &DenseMatrix<T>, s: &StructuredMatrix<T>) -> T {
    d.max_abs_diff(&DenseMatrix::from_structured(s))
}

/// Runs the generic dense filter on the alignment system for rounds
/// `0..=t_max` and measures how far it is from the structured closed forms.
/// Covariances do not depend on the data, so zero measurements and moves
/// are fed in.
pub fn compare_with_dense<T: Scalar>(cfg: &ModelConfig<T>, t_max: usize) -> Result<Vec<RoundDeviation<T>>> {
    let sys = LinearSystem::alignment(cfg)?;
    let sched = alpha_schedule(cfg, t_max);
    let m = mn::<T>(cfg.n)?;
    let drift = m.scale(cfg.stretch_factor() * cfg.sigma_d * cfg.sigma_d);
    let zeros = vec![T::zero(); cfg.n];
    let mut st = KalmanState::alignment_prior(cfg)?;
    let mut out = Vec::with_capacity(t_max + 1);
    for t in 0..=t_max {
        let (p_pre, k) = sched.filter_state(t);
        let post = measurement_update(&st, &sys, &zeros)?;
        let cov_post = post.cov_post.as_ref().expect("set by measurement update");
        let closed_post = sched.posterior_cov(t);
        let next = time_update(&post, &sys, &zeros)?;
        out.push(RoundDeviation {
            round: t,
            alpha: sched.alpha(t),
            rho_star: sched.rho_star(t),
            cov_pre: gap(&st.cov_pre, &p_pre),
            gain: gap(&gain(&st, &sys)?, &k),
            cov_post: gap(cov_post, &closed_post),
            next_cov_pre: gap(&next.cov_pre, &closed_post.sub(&drift)?),
        });
        st = next;
    }
    Ok(out)
}
