//! Vector fields (t, x) ↦ ℝ^d tagged with what they represent.

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::schedule::{DiffusionScale, Schedule};

/// Anything that can be evaluated as a time-dependent vector field.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()>;
}

/// What a field computes, relative to the schedule it is attached to.
#[derive(Debug, Clone)]
pub enum FieldKind {
    /// s = ∇ log ρ(t, ·).
    Score,
    /// η_Z = E[Z | I_t = x].
    NoisePredictor,
    /// η_X = E[X | I_t = x].
    DataPredictor,
    /// Forward drift b^ε = α̇η_Z + β̇η_X + εs.
    Drift(DiffusionScale),
    /// Backward drift ←b^ε = α̇η_Z + β̇η_X − εs.
    BackwardDrift(DiffusionScale),
}

impl FieldKind {
    pub fn label(&self) -> String {
        match self {
            FieldKind::Score => "score".into(),
            FieldKind::NoisePredictor => "noise-predictor".into(),
            FieldKind::DataPredictor => "data-predictor".into(),
            FieldKind::Drift(e) => format!("drift({e})"),
            FieldKind::BackwardDrift(e) => format!("backward-drift({e})"),
        }
    }

    pub fn same_as(&self, other: &FieldKind) -> bool {
        match (self, other) {
            (FieldKind::Score, FieldKind::Score)
            | (FieldKind::NoisePredictor, FieldKind::NoisePredictor)
            | (FieldKind::DataPredictor, FieldKind::DataPredictor) => true,
            (FieldKind::Drift(a), FieldKind::Drift(b)) | (FieldKind::BackwardDrift(a), FieldKind::BackwardDrift(b)) => {
                a.same_as(b)
            }
            _ => false,
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, x, out)
    }
}

/// A vector field together with its kind and the schedule it refers to.
#[derive(Clone)]
pub struct DriftField {
    kind: FieldKind,
    schedule: Schedule,
    inner: Arc<dyn VectorField>,
}

impl fmt::Debug for DriftField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftField")
            .field("kind", &self.kind)
            .field("schedule", &self.schedule.name())
            .field("dim", &self.dim())
            .finish()
    }
}

impl DriftField {
    pub fn new(kind: FieldKind, schedule: Schedule, inner: Arc<dyn VectorField>) -> Self {
        DriftField { kind, schedule, inner }
    }

    /// Wraps a closure writing the field value into its output slice.
    pub fn from_fn<F>(kind: FieldKind, schedule: Schedule, dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        DriftField::new(kind, schedule, Arc::new(FnField { dim, f }))
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        self.inner.eval_into(t, x, out)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }
}
