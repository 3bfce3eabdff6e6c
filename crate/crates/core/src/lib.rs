//! Noisy alignment of agents on a line.
//!
//! `n` agents hold positions `θ_i`. Each round every agent observes its
//! stretch (the mean of the other positions minus its own) through Gaussian
//! noise, moves, and is then pushed by Gaussian drift. The crate provides the
//! dynamics, the closed-form theory of weighted-average policies, a Kalman
//! filter view of the problem, best-response computations, and a Monte Carlo
//! engine.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! structured matrix algebra also works over exact rationals.

pub mod analysis;
pub mod dense;
pub mod error;
pub mod game;
pub mod kalman;
pub mod matrix;
pub mod model;
pub mod policy;
pub mod rng;
mod scalar;
pub mod sim;

pub use error::{Error, Result, Singularity};
pub use scalar::Scalar;

pub type ModelConfigF64 = model::ModelConfig<f64>;
pub type ModelConfigF32 = model::ModelConfig<f32>;
pub type WorldStateF64 = model::WorldState<f64>;
pub type StructuredMatrixF64 = matrix::StructuredMatrix<f64>;
pub type DenseMatrixF64 = dense::DenseMatrix<f64>;
pub type AlphaScheduleF64 = kalman::AlphaSchedule<f64>;
pub type PolicySpecF64 = policy::PolicySpec<f64>;
pub type RunPlanF64 = sim::RunPlan<f64>;
