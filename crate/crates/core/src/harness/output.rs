use std::io::Write;

use super::convergence::{ConvergenceResult, WithinStepRow};
use super::equivalent::EquivalentRow;
use crate::error::Result;

/// `dynamics,schedule,scheme,steps,replicate,rmse`, one row per run.
pub fn write_convergence_csv<W: Write>(result: &ConvergenceResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dynamics", "schedule", "scheme", "steps", "replicate", "rmse"])?;
    for r in &result.rows {
        w.write_record([
            r.dynamics.label().to_string(),
            r.schedule.label().to_string(),
            r.scheme.short_name().to_string(),
            r.steps.to_string(),
            r.replicate.to_string(),
            r.rmse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `dynamics,lazy_steps,equivalent_steps,ci_low,ci_high,censored`.
pub fn write_equivalent_steps_csv<W: Write>(rows: &[EquivalentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dynamics", "lazy_steps", "equivalent_steps", "ci_low", "ci_high", "censored"])?;
    for r in rows {
        w.write_record([
            r.dynamics.label().to_string(),
            r.lazy_steps.to_string(),
            r.estimate.as_f64().to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.estimate.censoring().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `dynamics,steps,count,mean,median,ci_low,ci_high`.
pub fn write_within_step_csv<W: Write>(rows: &[WithinStepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dynamics", "steps", "count", "mean", "median", "ci_low", "ci_high"])?;
    for r in rows {
        w.write_record([
            r.dynamics.label().to_string(),
            r.steps.to_string(),
            r.count.to_string(),
            r.mean.to_string(),
            r.median.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
