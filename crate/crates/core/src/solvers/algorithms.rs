//! Samplers that run the lazy schedules directly off a linear-schedule
//! velocity field, without building converted fields first.

use super::{Path, WienerPath};
use crate::conversion::check_linear_velocity;
use crate::error::{Error, Result};
use crate::field::DriftField;

#[inline]
fn lazy_d(t: f64) -> f64 {
    1.0 + 2.0 * t * (t - 1.0)
}

#[inline]
fn lazy_sde_beta(t: f64) -> f64 {
    t * t / lazy_d(t)
}

#[allow(clippy::too_many_arguments)]
fn path(
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    noise: Vec<f64>,
    method: &str,
    schedule: &str,
    eps: &str,
    seed: Option<u64>,
    evals: usize,
) -> Path {
    Path {
        dim,
        times,
        states,
        noise_terms: noise,
        config: None,
        method: method.into(),
        schedule: schedule.into(),
        diffusion: eps.into(),
        seed,
        drift_evals: evals,
    }
}

/// Explicit Euler on the lazy ODE schedule, from z at t = 0.
pub fn ode_sample_path(linear_velocity: &DriftField, steps: usize, initial: &[f64]) -> Result<Path> {
    check_linear_velocity(linear_velocity)?;
    if steps == 0 {
        return Err(Error::invalid("at least one step is required"));
    }
    let dim = initial.len();
    let dt = 1.0 / steps as f64;
    let mut x = initial.to_vec();
    let mut y = vec![0.0; dim];
    let mut vb = vec![0.0; dim];
    let mut states = Vec::with_capacity((steps + 1) * dim);
    states.extend_from_slice(&x);
    for n in 0..steps {
        let t = n as f64 / steps as f64;
        let d = lazy_d(t);
        let sd = d.sqrt();
        for i in 0..dim {
            y[i] = sd * x[i];
        }
        linear_velocity.eval_into(t, &y, &mut vb)?;
        for i in 0..dim {
            let b = (1.0 - 2.0 * t) / d * x[i] + vb[i] / sd;
            x[i] += dt * b;
        }
        states.extend_from_slice(&x);
    }
    let times = (0..=steps).map(|n| n as f64 / steps as f64).collect();
    Ok(path(dim, times, states, vec![0.0; steps * dim], "alg1", "lazy-ode", "zero", None, steps))
}

pub fn ode_sample(linear_velocity: &DriftField, steps: usize, initial: &[f64]) -> Result<Vec<f64>> {
    let p = ode_sample_path(linear_velocity, steps, initial)?;
    Ok(p.endpoint().to_vec())
}

/// Euler–Maruyama on the lazy SDE schedule with ε = ε*, from the point mass
/// at 0.
///
/// The first step has zero drift and noise variance β_Δt; later steps use
/// b*(t, x) = (2/d)((1−2t)x + t·b̄(t, (d/t)x)) and noise variance
/// β_{t+Δt} − β_t, where β_t = t²/d_t.
pub fn sde_sample_path(linear_velocity: &DriftField, steps: usize, wiener: &WienerPath) -> Result<Path> {
    check_linear_velocity(linear_velocity)?;
    if steps < 2 {
        return Err(Error::invalid("the SDE sampler needs at least two steps"));
    }
    let dim = wiener.dim();
    let dw = wiener.coarsen(steps)?;
    let dt = 1.0 / steps as f64;
    let mut noise = vec![0.0; steps * dim];
    let mut states = Vec::with_capacity((steps + 1) * dim);
    states.extend(std::iter::repeat(0.0).take(dim));

    let first_sd = (lazy_sde_beta(dt) / dt).sqrt();
    let mut x: Vec<f64> = dw[..dim].iter().map(|w| first_sd * w).collect();
    noise[..dim].copy_from_slice(&x);
    states.extend_from_slice(&x);

    let mut y = vec![0.0; dim];
    let mut vb = vec![0.0; dim];
    for n in 1..steps {
        let t = n as f64 / steps as f64;
        let t_next = (n + 1) as f64 / steps as f64;
        let d = lazy_d(t);
        for i in 0..dim {
            y[i] = d / t * x[i];
        }
        linear_velocity.eval_into(t, &y, &mut vb)?;
        let sd = ((lazy_sde_beta(t_next) - lazy_sde_beta(t)) / dt).sqrt();
        for i in 0..dim {
            let b = 2.0 / d * ((1.0 - 2.0 * t) * x[i] + t * vb[i]);
            let v = sd * dw[n * dim + i];
            noise[n * dim + i] = v;
            x[i] += dt * b + v;
        }
        states.extend_from_slice(&x);
    }
    let times = (0..=steps).map(|n| n as f64 / steps as f64).collect();
    Ok(path(dim, times, states, noise, "alg2", "lazy-sde", "optimal", wiener.seed(), steps - 1))
}

pub fn sde_sample(linear_velocity: &DriftField, steps: usize, wiener: &WienerPath) -> Result<Vec<f64>> {
    let p = sde_sample_path(linear_velocity, steps, wiener)?;
    Ok(p.endpoint().to_vec())
}

/// Per-step noise variances of the SDE sampler, first step included.
pub fn sde_sample_noise_variances(steps: usize) -> Vec<f64> {
    let dt = 1.0 / steps as f64;
    std::iter::once(lazy_sde_beta(dt))
        .chain((1..steps).map(|n| lazy_sde_beta((n + 1) as f64 / steps as f64) - lazy_sde_beta(n as f64 / steps as f64)))
        .collect()
}
