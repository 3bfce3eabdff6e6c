use crate::error::Result;
use crate::matrix::{mn, StructuredMatrix};
use crate::model::ModelConfig;
use crate::Scalar;

/// The scalar sequence `α_t` driving the alignment filter's covariance
/// (`P_t⁻ = −α_t M_n`) and the optimal responsiveness
/// `ρ★(t) = α_t / ((n/(n−1)) α_t + σm²)`.
///
/// Computed eagerly up to a horizon; queries past it iterate forward from
/// the last cached value without mutating the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSchedule<T> {
    cfg: ModelConfig<T>,
    alphas: Vec<T>,
    rhos: Vec<T>,
}

impl<T: Scalar> AlphaSchedule<T> {
    pub fn new(cfg: &ModelConfig<T>, t_max: usize) -> Self {
        let alpha0 = cfg.stretch_factor() * cfg.sigma0 * cfg.sigma0;
        let mut sched = Self {
            cfg: *cfg,
            alphas: vec![alpha0],
            rhos: Vec::new(),
        };
        sched.rhos.push(sched.rho_for(alpha0));
        sched.extend_to(t_max);
        sched
    }

    pub fn config(&self) -> &ModelConfig<T> {
        &self.cfg
    }

    /// Last cached round.
    pub fn horizon(&self) -> usize {
        self.alphas.len() - 1
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn rhos(&self) -> &[T] {
        &self.rhos
    }

    pub fn extend_to(&mut self, t_max: usize) {
        while self.alphas.len() <= t_max {
            let next = self.next_alpha(*self.alphas.last().unwrap());
            self.alphas.push(next);
            self.rhos.push(self.rho_for(next));
        }
    }

    /// One step of `α ↦ σm² α / ((n/(n−1)) α + σm²) + (n/(n−1)) σd²`.
    pub fn next_alpha(&self, alpha: T) -> T {
        let f = self.cfg.stretch_factor();
        let sm2 = self.cfg.sigma_m * self.cfg.sigma_m;
        let sd2 = self.cfg.sigma_d * self.cfg.sigma_d;
        sm2 * alpha / (f * alpha + sm2) + f * sd2
    }

    pub fn rho_for(&self, alpha: T) -> T {
        let sm2 = self.cfg.sigma_m * self.cfg.sigma_m;
        alpha / (self.cfg.stretch_factor() * alpha + sm2)
    }

    pub fn alpha(&self, t: usize) -> T {
        match self.alphas.get(t) {
            Some(&a) => a,
            None => {
                let mut a = *self.alphas.last().unwrap();
                for _ in self.horizon()..t {
                    a = self.next_alpha(a);
                }
                a
            }
        }
    }

    pub fn rho_star(&self, t: usize) -> T {
        match self.rhos.get(t) {
            Some(&r) => r,
            None => self.rho_for(self.alpha(t)),
        }
    }

    /// Geometric rate at which `|α_t − α_∞|` is guaranteed to shrink:
    /// `a / (a + α_∞)` with `a = ((n−1)/n) σm²`.
    pub fn contraction_factor(&self) -> T {
        let a = self.cfg.sigma_m * self.cfg.sigma_m / self.cfg.stretch_factor();
        a / (a + crate::analysis::alpha_infty(&self.cfg))
    }

    /// `(P_t⁻, K_t) = (−α_t M_n, −ρ★(t) M_n)`.
    pub fn filter_state(&self, t: usize) -> (StructuredMatrix<T>, StructuredMatrix<T>) {
        let m = mn::<T>(self.cfg.n).expect("validated n >= 2");
        (m.scale(-self.alpha(t)), m.scale(-self.rho_star(t)))
    }

    /// `P_t = −((n−1)/n) σm² α_t / (α_t + ((n−1)/n) σm²) · M_n`.
    pub fn posterior_cov(&self, t: usize) -> StructuredMatrix<T> {
        let m = mn::<T>(self.cfg.n).expect("validated n >= 2");
        let a = self.cfg.sigma_m * self.cfg.sigma_m / self.cfg.stretch_factor();
        let alpha = self.alpha(t);
        m.scale(-(a * alpha) / (alpha + a))
    }
}

pub fn alpha_schedule<T: Scalar>(cfg: &ModelConfig<T>, t_max: usize) -> AlphaSchedule<T> {
    AlphaSchedule::new(cfg, t_max)
}

pub fn closed_form_filter_state<T: Scalar>(
    cfg: &ModelConfig<T>,
    t: usize,
) -> Result<(StructuredMatrix<T>, StructuredMatrix<T>)> {
    cfg.validate()?;
    Ok(AlphaSchedule::new(cfg, t).filter_state(t))
}
