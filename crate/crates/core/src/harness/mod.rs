//! Convergence experiments against the Gaussian-mixture oracle.
//!
//! Each replicate draws one Wiener path and one initial point and runs the
//! four (ODE | SDE) × (linear | lazy) configurations at every step count,
//! all driven by the oracle's linear-schedule velocity. Endpoints are scored
//! by rmse against a per-replicate reference, then summarized with
//! bootstrap intervals, equivalent-steps tables and within-step agreement.

mod config;
mod convergence;
mod equivalent;
mod kl;
mod output;
mod stats;

pub use config::{Dynamics, ExperimentConfig, ReferenceRule, ScheduleChoice};
pub use convergence::{
    cell_field, dynamics_gap, initial_draw, rmse, run_convergence, within_step_agreement, Aggregate, Cell, CellFailure,
    ConvergenceResult, ConvergenceRow, DynamicsGap, ReplicateSeeds, WithinStepRow,
};
pub use equivalent::{equivalent_from_curves, equivalent_steps, interpolate_steps, EquivalentRow, EquivalentSteps};
pub use kl::{kl_integral, kl_integrand, kl_invariance_report, scalar_minimizer, KlReport, MinimizerCheck, T_MIN};
pub use output::{write_convergence_csv, write_equivalent_steps_csv, write_within_step_csv};
pub use stats::{bootstrap_ci, isotonic_decreasing, mean, median};
