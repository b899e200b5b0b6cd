//! Stochastic-interpolant schedule calculus.
//!
//! Interpolation schedules and their derived scalars, conversions between
//! score / predictor / drift fields and between schedules, fixed-step
//! ODE/SDE samplers, an analytic Gaussian-mixture oracle, and a small
//! convergence harness built on top of them.

pub mod conversion;
pub mod error;
pub mod field;
pub mod gmm_oracle;
pub mod harness;
pub mod limits;
pub mod quadrature;
pub mod schedule;
pub mod seed;
pub mod solvers;
pub mod svg;

pub use error::{Error, Result};
