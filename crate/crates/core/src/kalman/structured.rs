use crate::error::{check_len, Error, Result};
use crate::matrix::{mn, StructuredMatrix};
use crate::Scalar;

use super::AlphaSchedule;

/// The alignment filter's estimates, tracked with the closed-form gain
/// `K_t = −ρ★(t) M_n` instead of dense algebra.
///
/// A policy is Kalman-perfect when `estimate_pre` stays at zero.
#[derive(Debug, Clone)]
pub struct AlignmentFilter<T> {
    m: StructuredMatrix<T>,
    pub round: usize,
    pub estimate_pre: Vec<T>,
    pub estimate_post: Option<Vec<T>>,
}

impl<T: Scalar> AlignmentFilter<T> {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            m: mn(n)?,
            round: 0,
            estimate_pre: vec![T::zero(); n],
            estimate_post: None,
        })
    }

    pub fn measurement_update(&mut self, y: &[T], sched: &AlphaSchedule<T>) -> Result<&[T]> {
        check_len(self.m.n(), y.len())?;
        let k = self.m.scale(-sched.rho_star(self.round));
        let innovation: Vec<T> = y.iter().zip(&self.estimate_pre).map(|(&a, &b)| a - b).collect();
        let correction = k.apply(&innovation)?;
        let post = self
            .estimate_pre
            .iter()
            .zip(&correction)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(self.estimate_post.insert(post))
    }

    pub fn time_update(&mut self, moves: &[T]) -> Result<&[T]> {
        check_len(self.m.n(), moves.len())?;
        let Some(post) = self.estimate_post.take() else {
            return Err(Error::Argument(
                "time update requires a measurement update first".into(),
            ));
        };
        let shift = self.m.apply(moves)?;
        self.estimate_pre = post.iter().zip(&shift).map(|(&a, &b)| a + b).collect();
        self.round += 1;
        Ok(&self.estimate_pre)
    }

    pub fn max_abs_estimate(&self) -> T {
        self.estimate_pre.iter().map(|x| x.abs()).fold(T::zero(), T::max)
    }
}
