//! Conversions between field kinds, between schedules, and between paths.
//!
//! Within one schedule every field is an affine function of the score:
//!
//! ```text
//! η_Z = −α s        η_X = (x + α² s)/β
//! b^ε = (ε* + ε) s + (β̇/β) x        ←b^ε = (ε* − ε) s + (β̇/β) x
//! ```
//!
//! Across schedules, with c = α + β and u = β/c, fields of any schedule are
//! obtained from the linear-schedule ones (barred) evaluated at (u_t, x/c_t):
//!
//! ```text
//! s(t, x) = s̄(u, x/c)/c        η(t, x) = η̄(u, x/c)
//! b^ε(t, x) = (ċ/c) x + c u̇ b̄^ε̄(u, x/c),   ε̄_u = α ε / (β ε*)
//! ```
//!
//! and solutions driven by the same Brownian motion satisfy X_t = c_t X̄_{u_t}.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::field::{DriftField, FieldKind};
use crate::limits::RightLimit;
use crate::schedule::{eps_over_alpha_limit, CustomDiffusion, DiffusionScale, Schedule, ScheduleKind};
use crate::solvers::{Integrator, Path, SolverConfig, WienerPath};

type Buf = SmallVec<[f64; 16]>;

fn interior(t: f64, what: &str) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::singular(t, what))
    }
}

fn nonzero(v: f64, t: f64, what: &str) -> Result<f64> {
    if v == 0.0 || !v.is_finite() {
        Err(Error::singular(t, what))
    } else {
        Ok(v)
    }
}

/// Overwrites `v` (a field of kind `kind`) with the score.
fn to_score(kind: &FieldKind, s: &Schedule, t: f64, x: &[f64], v: &mut [f64]) -> Result<()> {
    match kind {
        FieldKind::Score => {}
        FieldKind::NoisePredictor => {
            let a = nonzero(s.alpha(t), t, "score from noise predictor (α = 0)")?;
            v.iter_mut().for_each(|e| *e = -*e / a);
        }
        FieldKind::DataPredictor => {
            let a = nonzero(s.alpha(t), t, "score from data predictor (α = 0)")?;
            let b = s.beta(t);
            for i in 0..v.len() {
                v[i] = (b * v[i] - x[i]) / (a * a);
            }
        }
        FieldKind::Drift(eps) | FieldKind::BackwardDrift(eps) => {
            let sign = if matches!(kind, FieldKind::Drift(_)) { 1.0 } else { -1.0 };
            let es = s.eps_star(t);
            let div = nonzero(es + sign * eps.at(s, t), t, "score from drift (ε* ± ε = 0)")?;
            let k = nonzero(s.beta(t), t, "score from drift (β = 0)").map(|b| s.beta_dot(t) / b)?;
            for i in 0..v.len() {
                v[i] = (v[i] - k * x[i]) / div;
            }
        }
    }
    Ok(())
}

/// Overwrites the score `v` with the field of kind `kind`.
fn from_score(kind: &FieldKind, s: &Schedule, t: f64, x: &[f64], v: &mut [f64]) -> Result<()> {
    match kind {
        FieldKind::Score => {}
        FieldKind::NoisePredictor => {
            let a = s.alpha(t);
            v.iter_mut().for_each(|e| *e *= -a);
        }
        FieldKind::DataPredictor => {
            let a = s.alpha(t);
            let b = nonzero(s.beta(t), t, "data predictor (β = 0)")?;
            for i in 0..v.len() {
                v[i] = (x[i] + a * a * v[i]) / b;
            }
        }
        FieldKind::Drift(eps) | FieldKind::BackwardDrift(eps) => {
            let sign = if matches!(kind, FieldKind::Drift(_)) { 1.0 } else { -1.0 };
            let w = s.eps_star(t) + sign * eps.at(s, t);
            let k = nonzero(s.beta(t), t, "drift from score (β = 0)").map(|b| s.beta_dot(t) / b)?;
            for i in 0..v.len() {
                v[i] = w * v[i] + k * x[i];
            }
        }
    }
    Ok(())
}

/// The same quantity as `field`, expressed as a field of kind `target`.
///
/// Evaluation is restricted to t ∈ (0, 1).
pub fn intra_convert(field: &DriftField, target: FieldKind) -> Result<DriftField> {
    if field.kind().same_as(&target) {
        return Err(Error::invalid(format!("field is already of kind {target}")));
    }
    let src = field.clone();
    let src_kind = field.kind().clone();
    let dst_kind = target.clone();
    let schedule = field.schedule().clone();
    let label = format!("{} from {}", target, src_kind);
    Ok(DriftField::from_fn(target, schedule.clone(), field.dim(), move |t, x, out| {
        interior(t, &label)?;
        src.eval_into(t, x, out)?;
        to_score(&src_kind, &schedule, t, x, out)?;
        from_score(&dst_kind, &schedule, t, x, out)
    }))
}

/// Source/target pair of an inter-schedule drift conversion.
#[derive(Debug, Clone)]
pub struct ConversionContext {
    pub source_schedule: Schedule,
    pub target_schedule: Schedule,
    pub source_eps: DiffusionScale,
    pub target_eps: DiffusionScale,
}

impl ConversionContext {
    /// ε̄ at u_t induced on the linear schedule by ε_t on the target:
    /// ε̄ = α ε / (β ε*).
    pub fn linear_eps_at(&self, t: f64) -> f64 {
        let s = &self.target_schedule;
        s.alpha(t) * self.target_eps.at(s, t) / (s.beta(t) * s.eps_star(t))
    }

    /// Whether the induced ε̄ equals the source field's diffusion, so the
    /// source drift can be used as is.
    fn direct(&self) -> bool {
        matches!(
            (&self.source_eps, &self.target_eps),
            (DiffusionScale::Zero, DiffusionScale::Zero) | (DiffusionScale::Optimal, DiffusionScale::Optimal)
        )
    }
}

/// Transfers a linear-schedule field to `target`.
///
/// The output has the same kind as the input; drifts get `target_eps` as
/// their diffusion (ignored for the other kinds).
pub fn inter_convert_field(linear_field: &DriftField, target: &Schedule, target_eps: &DiffusionScale) -> Result<DriftField> {
    if !linear_field.schedule().is_linear() {
        return Err(Error::invalid(format!("source field lives on '{}', not the linear schedule", linear_field.schedule().name())));
    }
    let src = linear_field.clone();
    let dim = src.dim();
    let tgt = target.clone();
    let src_kind = src.kind().clone();
    let out_kind = match &src_kind {
        FieldKind::Drift(_) => FieldKind::Drift(target_eps.clone()),
        FieldKind::BackwardDrift(_) => FieldKind::BackwardDrift(target_eps.clone()),
        other => other.clone(),
    };
    let ctx = match &src_kind {
        FieldKind::Drift(e) | FieldKind::BackwardDrift(e) => Some(ConversionContext {
            source_schedule: src.schedule().clone(),
            target_schedule: target.clone(),
            source_eps: e.clone(),
            target_eps: target_eps.clone(),
        }),
        _ => None,
    };
    let linear = src.schedule().clone();

    Ok(DriftField::from_fn(out_kind, target.clone(), dim, move |t, x, out| {
        let c = tgt.c(t);
        if c == 0.0 {
            return Err(Error::singular(t, "inter-schedule conversion (c = 0)"));
        }
        let u = tgt.u(t);
        let y: Buf = x.iter().map(|v| v / c).collect();
        src.eval_into(u, &y, out)?;
        match &src_kind {
            FieldKind::NoisePredictor | FieldKind::DataPredictor => {}
            FieldKind::Score => out.iter_mut().for_each(|v| *v /= c),
            FieldKind::Drift(_) | FieldKind::BackwardDrift(_) => {
                let ctx = ctx.as_ref().unwrap();
                if !ctx.direct() {
                    // Rebuild the linear drift for the induced ε̄ from its score.
                    interior(t, "inter-schedule drift conversion")?;
                    to_score(&src_kind, &linear, u, &y, out)?;
                    let eps_bar = ctx.linear_eps_at(t);
                    let sign = if matches!(src_kind, FieldKind::Drift(_)) { 1.0 } else { -1.0 };
                    let w = linear.eps_star(u) + sign * eps_bar;
                    for i in 0..out.len() {
                        out[i] = w * out[i] + y[i] / u;
                    }
                }
                let (scale, shift) = (c * tgt.u_dot(t), tgt.c_dot(t) / c);
                for i in 0..out.len() {
                    out[i] = shift * x[i] + scale * out[i];
                }
            }
        }
        Ok(())
    }))
}

pub(crate) fn check_linear_velocity(v: &DriftField) -> Result<()> {
    if v.schedule().is_linear() && matches!(v.kind(), FieldKind::Drift(DiffusionScale::Zero)) {
        Ok(())
    } else {
        Err(Error::invalid(format!("expected the linear-schedule velocity, got {} on {}", v.kind(), v.schedule().name())))
    }
}

/// Lazy ODE velocity from the linear one:
/// b(t, x) = ((1−2t)/d) x + b̄(t, √d x)/√d, d = (1−t)² + t².
pub fn linear_to_lazy_ode_velocity(linear_velocity: &DriftField) -> Result<DriftField> {
    check_linear_velocity(linear_velocity)?;
    let v = linear_velocity.clone();
    Ok(DriftField::from_fn(
        FieldKind::Drift(DiffusionScale::Zero),
        crate::schedule::make_lazy_ode(),
        v.dim(),
        move |t, x, out| {
            let d = 1.0 + 2.0 * t * (t - 1.0);
            let sd = d.sqrt();
            let y: Buf = x.iter().map(|xi| sd * xi).collect();
            v.eval_into(t, &y, out)?;
            for i in 0..x.len() {
                out[i] = (1.0 - 2.0 * t) / d * x[i] + out[i] / sd;
            }
            Ok(())
        },
    ))
}

/// Lazy SDE optimal drift from the linear velocity:
/// b*(t, x) = (2/d)((1−2t) x + t b̄(t, (d/t) x)), with b*(0, 0) = 0.
pub fn linear_to_lazy_sde_drift(linear_velocity: &DriftField) -> Result<DriftField> {
    check_linear_velocity(linear_velocity)?;
    let v = linear_velocity.clone();
    Ok(DriftField::from_fn(
        FieldKind::Drift(DiffusionScale::Optimal),
        crate::schedule::make_lazy_sde(),
        v.dim(),
        move |t, x, out| {
            if t == 0.0 {
                if x.iter().all(|&xi| xi == 0.0) {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    return Ok(());
                }
                return Err(Error::singular(t, "lazy SDE drift away from the origin"));
            }
            let d = 1.0 + 2.0 * t * (t - 1.0);
            let y: Buf = x.iter().map(|xi| d / t * xi).collect();
            v.eval_into(t, &y, out)?;
            for i in 0..x.len() {
                out[i] = 2.0 / d * ((1.0 - 2.0 * t) * x[i] + t * out[i]);
            }
            Ok(())
        },
    ))
}

/// X_{t_n} = c_{t_n} X̄_{u_{t_n}} for a linear-schedule path sampled on the
/// grid {u_{t_n}} of the target's uniform grid t_n = n/N.
pub fn path_convert(linear_path: &Path, target: &Schedule) -> Result<Path> {
    let n = linear_path.len().checked_sub(1).filter(|&n| n > 0).ok_or_else(|| Error::invalid("path has no steps"))?;
    let d = linear_path.dim;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    for (i, (&t, &found)) in times.iter().zip(&linear_path.times).enumerate() {
        let expected = target.u(t);
        if (expected - found).abs() > 1e-12 {
            return Err(Error::GridMismatch { index: i, expected, found });
        }
    }
    let mut states = Vec::with_capacity(linear_path.states.len());
    for (t, x) in times.iter().zip(linear_path.states()) {
        let c = target.c(*t);
        states.extend(x.iter().map(|v| c * v));
    }
    Ok(Path {
        dim: d,
        times,
        states,
        noise_terms: linear_path.noise_terms.clone(),
        config: linear_path.config,
        method: linear_path.method.clone(),
        schedule: format!("{} (from linear)", target.name()),
        diffusion: linear_path.diffusion.clone(),
        seed: linear_path.seed,
        drift_evals: linear_path.drift_evals,
    })
}

/// The linear-schedule diffusion ε̄_u = α_t ε_t / (β_t ε*_t), t = u⁻¹(u),
/// induced by `target_eps` on `target`. Zero and optimal map to themselves.
pub fn linear_side_diffusion(target: &Schedule, target_eps: &DiffusionScale) -> DiffusionScale {
    match target_eps {
        DiffusionScale::Zero => DiffusionScale::Zero,
        DiffusionScale::Optimal => DiffusionScale::Optimal,
        other => {
            let ctx = ConversionContext {
                source_schedule: crate::schedule::make_linear(),
                target_schedule: target.clone(),
                source_eps: other.clone(),
                target_eps: other.clone(),
            };
            let tgt = target.clone();
            DiffusionScale::Custom(CustomDiffusion::new(format!("induced by {} on {}", other, target.name()), move |u| {
                match tgt.u_inverse(u) {
                    Ok(t) if t > 0.0 && t < 1.0 => ctx.linear_eps_at(t),
                    _ => f64::NAN,
                }
            }))
        }
    }
}

/// Solves the linear-schedule SDE of `linear_drift` on the grid u_{t_n},
/// t_n = n/N, driven by the time-changed increments of `wiener`.
/// [`path_convert`] maps the result onto `target`.
pub fn linear_side_path(
    linear_drift: &DriftField,
    target: &Schedule,
    config: SolverConfig,
    initial: &[f64],
    wiener: &WienerPath,
) -> Result<Path> {
    if !linear_drift.schedule().is_linear() || !matches!(linear_drift.kind(), FieldKind::Drift(_)) {
        return Err(Error::invalid("expected a linear-schedule drift"));
    }
    let n = config.steps;
    let times: Vec<f64> = (0..=n).map(|i| target.u(i as f64 / n as f64)).collect();
    let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let integ = Integrator::on_grid(linear_drift, config, times, dts)?;
    let dw = wiener.coarsen(n)?;
    let dw_bar = wiener_time_change(&dw, wiener.dim(), target)?;
    integ.run_with_increments(initial, &dw_bar, wiener.seed())
}

/// ΔW̄_n = √(u̇_{t_n}) ΔW_n on the uniform grid t_n = n/N (left-point rule).
/// `increments` is row-major `N × dim`.
pub fn wiener_time_change(increments: &[f64], dim: usize, schedule: &Schedule) -> Result<Vec<f64>> {
    if dim == 0 || increments.len() % dim != 0 {
        return Err(Error::invalid("increments do not form rows of the given dimension"));
    }
    let n = increments.len() / dim;
    let mut out = Vec::with_capacity(increments.len());
    for (k, row) in increments.chunks_exact(dim).enumerate() {
        let t = k as f64 / n as f64;
        let ud = schedule.u_dot(t);
        if !(ud >= 0.0) || !ud.is_finite() {
            return Err(Error::NonMonotoneTimeChange { t });
        }
        let s = ud.sqrt();
        out.extend(row.iter().map(|w| s * w));
    }
    Ok(out)
}

/// b(0, X₀) for a point-mass schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDrift {
    Bounded(Vec<f64>),
    /// ε_t/α_t diverges as t → 0₊.
    Unbounded,
}

/// The scalar ċ₀ − lim ε/α multiplying z in the initial drift, or `None`
/// when the limit diverges.
pub fn initial_drift_factor(schedule: &Schedule, diffusion: &DiffusionScale) -> Result<Option<f64>> {
    if schedule.kind() != ScheduleKind::PointMass {
        return Err(Error::invalid(format!("'{}' is not a point-mass schedule", schedule.name())));
    }
    match eps_over_alpha_limit(schedule, diffusion) {
        RightLimit::Finite(l) => Ok(Some(schedule.c_dot(0.0) - l)),
        RightLimit::Divergent => Ok(None),
    }
}

/// b(0, X₀) = (ċ₀ − lim_{t→0₊} ε_t/α_t) z.
pub fn point_mass_initial_drift(schedule: &Schedule, diffusion: &DiffusionScale, z: &[f64]) -> Result<InitialDrift> {
    Ok(match initial_drift_factor(schedule, diffusion)? {
        Some(f) => InitialDrift::Bounded(z.iter().map(|v| f * v).collect()),
        None => InitialDrift::Unbounded,
    })
}
