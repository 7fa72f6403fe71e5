//! Interval estimates for the number of distinct prime factors ω(m).
//!
//! The crate sieves ω and Ω over windows of integers, builds Box-Cox, score
//! and shifted-Poisson interval estimates on the `log log m` scale, measures
//! their empirical and asymptotic coverage, and trains local adjustment
//! models from smoothed sieve data.

// NaN-rejecting guards read `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod cache;
pub mod coverage;
pub mod error;
pub mod estimator;
pub mod intervals;
pub mod numerics;
pub mod training;

pub use arith::{exp_exp, loglog, omega_phi, sieve_window, LogLog, Magnitude, OmegaWindow, SpfTable};
pub use coverage::{window_coverage, CoverageReport, FuzzyBounds, WindowCoverage};
pub use error::{Error, Result};
pub use estimator::Estimator;
pub use intervals::{Bounds, IntervalSpec, ShiftedPoissonModel, TrainedKind, TrainedModel};
pub use training::{build_trained_model, TrainingGrid};
