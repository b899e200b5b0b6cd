use std::fmt;
use std::str::FromStr;

use super::{Path, WienerPath};
use crate::conversion::initial_drift_factor;
use crate::error::{Error, Result};
use crate::field::{DriftField, FieldKind};
use crate::schedule::{qv_integral, DiffusionScale, Schedule, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
    PredictorCorrector,
    Heun,
}

impl Scheme {
    pub fn short_name(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "em",
            Scheme::PredictorCorrector => "pc",
            Scheme::Heun => "heun",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "em" | "euler" | "euler-maruyama" => Ok(Scheme::EulerMaruyama),
            "pc" | "predictor-corrector" => Ok(Scheme::PredictorCorrector),
            "heun" => Ok(Scheme::Heun),
            other => Err(format!("unknown scheme '{other}' (expected em, pc or heun)")),
        }
    }
}

/// How the first step is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FirstStepRule {
    Standard,
    /// For the linear schedule with ε = ε*, whose drift and diffusion are
    /// infinite at t = 0: take the first step under the lazy SDE schedule
    /// and map it back (see [`linear_optimal_first_step`]).
    LazyFirstStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub steps: usize,
    /// Return Y_N instead of computing the corrected Ỹ_N (PC and Heun).
    pub skip_final_correction: bool,
    pub first_step: FirstStepRule,
}

impl SolverConfig {
    pub fn new(scheme: Scheme, steps: usize) -> Self {
        SolverConfig { scheme, steps, skip_final_correction: true, first_step: FirstStepRule::Standard }
    }

    pub fn with_first_step(mut self, rule: FirstStepRule) -> Self {
        self.first_step = rule;
        self
    }

    pub fn with_final_correction(mut self) -> Self {
        self.skip_final_correction = false;
        self
    }
}

/// X̄_Δt for the linear schedule with ε = ε*.
///
/// One Euler–Maruyama step of the lazy SDE schedule from its point mass has
/// zero drift and noise variance β_Δt; dividing by c_Δt = Δt/d_Δt gives a
/// state of variance d_Δt = (1−Δt)² + Δt², i.e. √d_Δt times the first
/// coarse increment normalized to unit variance.
pub fn linear_optimal_first_step(increment: &[f64], dt: f64) -> Vec<f64> {
    let d = (1.0 - dt) * (1.0 - dt) + dt * dt;
    let scale = (d / dt).sqrt();
    increment.iter().map(|w| scale * w).collect()
}

#[derive(Debug, Clone, Copy)]
enum Start {
    Given,
    /// X₀ = 0 and b(0, X₀) = factor · z.
    PointMass { factor: f64 },
    LazyFirstStep,
}

/// A configured fixed-grid integrator, reusable across noise realizations.
///
/// Grid, noise scales and start rule are resolved once; [`Integrator::run`]
/// then only evaluates the drift.
#[derive(Clone)]
pub struct Integrator {
    field: DriftField,
    diffusion: DiffusionScale,
    config: SolverConfig,
    /// Times at which states are reported.
    times: Vec<f64>,
    dts: Vec<f64>,
    /// √(∫2ε / Δt) per step.
    noise_scale: Vec<f64>,
    start: Start,
    reverse: bool,
}

fn drift_diffusion(field: &DriftField) -> Result<DiffusionScale> {
    match field.kind() {
        FieldKind::Drift(e) => Ok(e.clone()),
        other => Err(Error::invalid(format!("forward integration needs a drift field, got {other}"))),
    }
}

fn noise_scales(schedule: &Schedule, diffusion: &DiffusionScale, intervals: &[(f64, f64)]) -> Result<Vec<f64>> {
    intervals
        .iter()
        .map(|&(s, t)| {
            if diffusion.is_zero() || s == t {
                return Ok(0.0);
            }
            let qv = qv_integral(schedule, diffusion, s, t)?;
            Ok((qv / (t - s)).sqrt())
        })
        .collect()
}

impl Integrator {
    /// Forward integration over the uniform grid t_n = n/N.
    pub fn new(field: &DriftField, config: SolverConfig) -> Result<Self> {
        if config.steps == 0 {
            return Err(Error::invalid("at least one step is required"));
        }
        let n = config.steps;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let dts = vec![1.0 / n as f64; n];
        Self::on_grid(field, config, times, dts)
    }

    /// Forward integration over an arbitrary increasing grid; `dts` are the
    /// step lengths used in the updates.
    pub fn on_grid(field: &DriftField, config: SolverConfig, times: Vec<f64>, dts: Vec<f64>) -> Result<Self> {
        let diffusion = drift_diffusion(field)?;
        let schedule = field.schedule();
        let start = match (schedule.kind(), &diffusion, config.first_step) {
            (_, _, FirstStepRule::LazyFirstStep) => {
                if !(schedule.is_linear() && matches!(diffusion, DiffusionScale::Optimal)) {
                    return Err(Error::invalid("the lazy first step applies only to the linear schedule with optimal diffusion"));
                }
                Start::LazyFirstStep
            }
            (ScheduleKind::PointMass, _, _) => match initial_drift_factor(schedule, &diffusion)? {
                Some(factor) => Start::PointMass { factor },
                None => {
                    return Err(Error::SingularDrift {
                        t: 0.0,
                        reason: format!("initial drift is unbounded: ε/α diverges as t → 0 for {}", diffusion.label()),
                    })
                }
            },
            (ScheduleKind::DensityAdmitting, _, FirstStepRule::Standard) => {
                if !diffusion.at(schedule, 0.0).is_finite() {
                    return Err(Error::SingularDrift {
                        t: 0.0,
                        reason: "infinite initial drift: the diffusion diverges at t = 0; use the lazy first step".into(),
                    });
                }
                Start::Given
            }
        };
        let skip_first = matches!(start, Start::LazyFirstStep);
        let intervals: Vec<(f64, f64)> = times
            .windows(2)
            .enumerate()
            .map(|(i, w)| if i == 0 && skip_first { (w[1], w[1]) } else { (w[0], w[1]) })
            .collect();
        let noise_scale = noise_scales(schedule, &diffusion, &intervals)?;
        Ok(Integrator { field: field.clone(), diffusion, config, times, dts, noise_scale, start, reverse: false })
    }

    /// Reverse-time integration of dX_τ = −←b(1−τ, X)dτ + √(2ε) dW over
    /// τ_n = n/N, truncated at τ = 1 − 1/N.
    pub fn reverse(backward_field: &DriftField, config: SolverConfig) -> Result<Self> {
        let diffusion = match backward_field.kind() {
            FieldKind::BackwardDrift(e) => e.clone(),
            other => return Err(Error::invalid(format!("reverse integration needs a backward drift, got {other}"))),
        };
        let n = config.steps;
        if n < 2 {
            return Err(Error::invalid("reverse integration needs at least two steps"));
        }
        let times: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let dts = vec![1.0 / n as f64; n - 1];
        let intervals: Vec<(f64, f64)> = times.windows(2).map(|w| (1.0 - w[1], 1.0 - w[0])).collect();
        let noise_scale = noise_scales(backward_field.schedule(), &diffusion, &intervals)?;
        Ok(Integrator {
            field: backward_field.clone(),
            diffusion,
            config,
            times,
            dts,
            noise_scale,
            start: Start::Given,
            reverse: true,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Coarsens `wiener` to the solver grid and integrates from `initial`.
    ///
    /// For point-mass schedules the state starts at 0 and `initial` is the
    /// Gaussian draw z entering through the initial drift.
    pub fn run(&self, initial: &[f64], wiener: &WienerPath) -> Result<Path> {
        let incs = wiener.coarsen(self.config.steps)?;
        let steps = self.dts.len();
        self.run_with_increments(initial, &incs[..steps * wiener.dim()], wiener.seed())
    }

    /// Integrates with explicit increments (row-major, one row per step).
    pub fn run_with_increments(&self, initial: &[f64], dw: &[f64], seed: Option<u64>) -> Result<Path> {
        let d = self.field.dim();
        let steps = self.dts.len();
        if initial.len() != d || dw.len() != steps * d {
            return Err(Error::invalid(format!(
                "dimension mismatch: field {d}, initial {}, increments {} for {steps} steps",
                initial.len(),
                dw.len()
            )));
        }
        let mut noise = vec![0.0; steps * d];
        for n in 0..steps {
            for i in 0..d {
                noise[n * d + i] = self.noise_scale[n] * dw[n * d + i];
            }
        }

        let mut states = Vec::with_capacity((steps + 1) * d);
        let mut evals = 0usize;
        let mut first = 0usize;
        let y0: Vec<f64> = match self.start {
            Start::Given => initial.to_vec(),
            Start::PointMass { .. } => vec![0.0; d],
            Start::LazyFirstStep => {
                states.extend_from_slice(initial);
                let x1 = linear_optimal_first_step(&dw[..d], self.dts[0]);
                noise[..d].copy_from_slice(&x1);
                first = 1;
                x1
            }
        };

        let field = &self.field;
        let times = &self.times;
        let reverse = self.reverse;
        let start = self.start;
        let mut drift = |n: usize, y: &[f64], out: &mut [f64]| -> Result<()> {
            evals += 1;
            let t = if reverse { 1.0 - times[n] } else { times[n] };
            match start {
                Start::PointMass { factor } if n == 0 => {
                    for i in 0..out.len() {
                        out[i] = factor * initial[i];
                    }
                }
                _ => field.eval_into(t, y, out)?,
            }
            if reverse {
                out.iter_mut().for_each(|v| *v = -*v);
            }
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularDrift { t, reason: format!("drift evaluated to {out:?}") });
            }
            Ok(())
        };

        step_scheme(
            self.config.scheme,
            self.config.skip_final_correction,
            &self.dts,
            first,
            y0,
            &noise,
            &mut drift,
            &mut states,
        )?;

        Ok(Path {
            dim: d,
            times: self.times.clone(),
            states,
            noise_terms: noise,
            config: Some(self.config),
            method: self.config.scheme.short_name().to_string(),
            schedule: self.field.schedule().name().to_string(),
            diffusion: self.diffusion.label(),
            seed,
            drift_evals: evals,
        })
    }
}

/// Runs one of the fixed-step schemes from step `first`, appending the
/// reported states (the corrected Ỹ_n for PC and Heun, Y_N last when the
/// final correction is skipped) to `states`.
#[allow(clippy::too_many_arguments)]
fn step_scheme(
    scheme: Scheme,
    skip_final: bool,
    dts: &[f64],
    first: usize,
    y0: Vec<f64>,
    noise: &[f64],
    drift: &mut dyn FnMut(usize, &[f64], &mut [f64]) -> Result<()>,
    states: &mut Vec<f64>,
) -> Result<()> {
    let d = y0.len();
    let steps = dts.len();
    states.extend_from_slice(&y0);
    if first >= steps {
        return Ok(());
    }
    match scheme {
        Scheme::EulerMaruyama => {
            let mut y = y0;
            let mut b = vec![0.0; d];
            for n in first..steps {
                drift(n, &y, &mut b)?;
                let v = &noise[n * d..(n + 1) * d];
                for i in 0..d {
                    y[i] = y[i] + dts[n] * b[i] + v[i];
                }
                states.extend_from_slice(&y);
            }
        }
        Scheme::PredictorCorrector | Scheme::Heun => {
            let heun = scheme == Scheme::Heun;
            // Ỹ_n, b(t_n, Y_n), predictor drift, Y_{n+1}, b(t_{n+1}, Y_{n+1}).
            let mut yt = y0.clone();
            let mut b_y = vec![0.0; d];
            drift(first, &y0, &mut b_y)?;
            let mut b_pred = vec![0.0; d];
            let mut y_next = vec![0.0; d];
            let mut b_next = vec![0.0; d];
            for n in first..steps {
                let dt = dts[n];
                let v = &noise[n * d..(n + 1) * d];
                let pred: &[f64] = if heun && n > first {
                    drift(n, &yt, &mut b_pred)?;
                    &b_pred
                } else {
                    &b_y
                };
                for i in 0..d {
                    y_next[i] = yt[i] + dt * pred[i] + v[i];
                }
                if n + 1 == steps && skip_final {
                    states.extend_from_slice(&y_next);
                    break;
                }
                drift(n + 1, &y_next, &mut b_next)?;
                for i in 0..d {
                    yt[i] = yt[i] + 0.5 * dt * (b_y[i] + b_next[i]) + v[i];
                }
                std::mem::swap(&mut b_y, &mut b_next);
                states.extend_from_slice(&yt);
            }
        }
    }
    Ok(())
}

/// Integrates the forward SDE dX = b^ε dt + √(2ε) dW on the uniform grid
/// of `config.steps` steps, ε being the diffusion of the drift field.
pub fn integrate(field: &DriftField, config: SolverConfig, initial: &[f64], wiener: &WienerPath) -> Result<Path> {
    Integrator::new(field, config)?.run(initial, wiener)
}

/// Integrates the reverse-time SDE driven by a backward drift, starting
/// from a data sample at τ = 0 (t = 1).
pub fn integrate_reverse(
    backward_field: &DriftField,
    config: SolverConfig,
    data_sample: &[f64],
    wiener: &WienerPath,
) -> Result<Path> {
    Integrator::reverse(backward_field, config)?.run(data_sample, wiener)
}
