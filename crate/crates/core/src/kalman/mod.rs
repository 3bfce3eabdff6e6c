//! Discrete-time Kalman filtering.
//!
//! [`gain`], [`measurement_update`] and [`time_update`] implement the
//! textbook filter on dense matrices and serve as the reference for the
//! closed forms of [`AlphaSchedule`]. [`AlignmentFilter`] tracks the estimates of
//! the alignment system in O(n) per round, and [`scalar_filter_step`] is the
//! one-dimensional filter faced by a single agent whose peers follow a
//! weighted-average schedule.

mod check;
mod scalar;
mod schedule;
mod structured;

pub use check::{compare_with_dense, RoundDeviation};
pub use scalar::scalar_filter_step;
pub use schedule::{alpha_schedule, closed_form_filter_state, AlphaSchedule};
pub use structured::AlignmentFilter;

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};
use crate::matrix::mn;
use crate::model::ModelConfig;
use crate::Scalar;

/// `x_{t+1} = A x_t + B u_t + w_t`, `z_t = H x_t + v_t`, with
/// `w ~ N(0, Q)` and `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<T> {
    pub a: DenseMatrix<T>,
    pub b: DenseMatrix<T>,
    pub h: DenseMatrix<T>,
    pub q: DenseMatrix<T>,
    pub r: DenseMatrix<T>,
}

impl<T: Scalar> LinearSystem<T> {
    /// The stretch dynamics as a filtering problem: the state is the
    /// stretch vector, measured directly with noise `σm² I`, moved by
    /// `M_n · moves`, and perturbed by the drift seen through `M_n`.
    pub fn alignment(cfg: &ModelConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let m = DenseMatrix::from_structured(&mn::<T>(n)?);
        let mm_t = m.mul(&m.transpose())?;
        Ok(Self {
            a: DenseMatrix::identity(n),
            b: m,
            h: DenseMatrix::identity(n),
            q: mm_t.scale(cfg.sigma_d * cfg.sigma_d),
            r: DenseMatrix::identity(n).scale(cfg.sigma_m * cfg.sigma_m),
        })
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }
}

/// Filter estimates and error covariances for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState<T> {
    pub round: usize,
    pub estimate_pre: Vec<T>,
    pub cov_pre: DenseMatrix<T>,
    pub estimate_post: Option<Vec<T>>,
    pub cov_post: Option<DenseMatrix<T>>,
}

impl<T: Scalar> KalmanState<T> {
    pub fn new(estimate_pre: Vec<T>, cov_pre: DenseMatrix<T>) -> Result<Self> {
        check_len(cov_pre.n(), estimate_pre.len())?;
        Ok(Self {
            round: 0,
            estimate_pre,
            cov_pre,
            estimate_post: None,
            cov_post: None,
        })
    }

    /// Round-0 state of the alignment filter: the estimate is zero and the
    /// covariance is that of the initial stretches, `σ0² M_n M_nᵀ`.
    pub fn alignment_prior(cfg: &ModelConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let m = DenseMatrix::from_structured(&mn::<T>(cfg.n)?);
        let cov = m.mul(&m.transpose())?.scale(cfg.sigma0 * cfg.sigma0);
        Self::new(vec![T::zero(); cfg.n], cov)
    }
}

/// `K = P⁻ Hᵀ (H P⁻ Hᵀ + R)⁻¹`.
pub fn gain<T: Scalar>(state: &KalmanState<T>, sys: &LinearSystem<T>) -> Result<DenseMatrix<T>> {
    check_len(sys.n(), state.cov_pre.n())?;
    let ht = sys.h.transpose();
    let pht = state.cov_pre.mul(&ht)?;
    let innovation = sys.h.mul(&pht)?.add(&sys.r)?;
    // K S = P⁻Hᵀ  <=>  Sᵀ Kᵀ = (P⁻Hᵀ)ᵀ
    let kt = innovation
        .transpose()
        .solve(&pht.transpose())
        .map_err(|e| Error::Numerical(format!("innovation covariance not invertible: {e}")))?;
    Ok(kt.transpose())
}

/// Folds the measurement `z` into the estimate.
pub fn measurement_update<T: Scalar>(state: &KalmanState<T>, sys: &LinearSystem<T>, z: &[T]) -> Result<KalmanState<T>> {
    check_len(sys.n(), z.len())?;
    let k = gain(state, sys)?;
    let predicted = sys.h.mul_vec(&state.estimate_pre)?;
    let innovation: Vec<T> = z.iter().zip(&predicted).map(|(&a, &b)| a - b).collect();
    let correction = k.mul_vec(&innovation)?;
    let estimate: Vec<T> = state
        .estimate_pre
        .iter()
        .zip(&correction)
        .map(|(&a, &b)| a + b)
        .collect();
    let cov = DenseMatrix::identity(sys.n())
        .sub(&k.mul(&sys.h)?)?
        .mul(&state.cov_pre)?;
    Ok(KalmanState {
        estimate_post: Some(estimate),
        cov_post: Some(cov),
        ..state.clone()
    })
}

/// Propagates the post-measurement estimate through the dynamics with move
/// `u`, producing the next round's prior.
pub fn time_update<T: Scalar>(state: &KalmanState<T>, sys: &LinearSystem<T>, u: &[T]) -> Result<KalmanState<T>> {
    check_len(sys.n(), u.len())?;
    let (Some(estimate), Some(cov)) = (&state.estimate_post, &state.cov_post) else {
        return Err(Error::Argument(
            "time update requires a measurement update first".into(),
        ));
    };
    let ax = sys.a.mul_vec(estimate)?;
    let bu = sys.b.mul_vec(u)?;
    let estimate_pre = ax.iter().zip(&bu).map(|(&a, &b)| a + b).collect();
    let cov_pre = sys.a.mul(cov)?.mul(&sys.a.transpose())?.add(&sys.q)?;
    Ok(KalmanState {
        round: state.round + 1,
        estimate_pre,
        cov_pre,
        estimate_post: None,
        cov_post: None,
    })
}
