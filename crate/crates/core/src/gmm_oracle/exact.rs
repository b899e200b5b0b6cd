//! Reference paths for standard-Gaussian data.
//!
//! With X ~ N(0, I) every drift is linear in x, b^ε(t, x) = k_t x with
//!
//! ```text
//! k_t = β̇/β − (ε* + ε)/(α² + β²) = (αα̇ + ββ̇ − ε)/(α² + β²),
//! ```
//!
//! so the SDE is solved by X_t = Φ_t (X₀ + ∫₀ᵗ Φ_s⁻¹ √(2ε_s) dW_s) with
//! Φ_t = exp ∫₀ᵗ k. The second form of k_t has no β in a denominator and
//! stays regular at t = 0 for density-admitting schedules.

use crate::error::{Error, Result};
use crate::limits::right_limit;
use crate::schedule::{DiffusionScale, Schedule, ScheduleKind};
use crate::solvers::{Path, WienerPath};

fn rate(s: &Schedule, e: &DiffusionScale, t: f64) -> f64 {
    let (a, b) = (s.alpha(t), s.beta(t));
    (a * s.alpha_dot(t) + b * s.beta_dot(t) - e.at(s, t)) / (a * a + b * b)
}

enum Start {
    /// X₀ = z.
    Given,
    /// Point mass, Φ integrable at 0: X₀ = 0 and z plays no role.
    Origin,
    /// Point mass with ε ≡ 0 and k ~ 1/t: X_t = m t exp(∫₀ᵗ (k − 1/s) ds) z
    /// with m the initial-drift factor ċ₀.
    Scaled { factor: f64 },
}

/// Strong reference solution on the fine grid of `wiener`, standard-Gaussian
/// data only.
///
/// ∫k is computed with Simpson's rule per fine interval and the stochastic
/// integral with the trapezoid rule against the fine increments, so the
/// result is an O(Δt_fine) reference rather than an exact object.
pub fn exact_gaussian_path(schedule: &Schedule, diffusion: &DiffusionScale, z: &[f64], wiener: &WienerPath) -> Result<Path> {
    let d = wiener.dim();
    if z.len() != d {
        return Err(Error::invalid(format!("z has {} entries, Wiener path has dimension {d}", z.len())));
    }
    let n = wiener.n_fine();
    let h = 1.0 / n as f64;

    let start = match schedule.kind() {
        ScheduleKind::DensityAdmitting => {
            if !diffusion.at(schedule, 0.0).is_finite() {
                return Err(Error::singular(0.0, "exact path (diffusion is not integrable at t = 0)"));
            }
            Start::Given
        }
        ScheduleKind::PointMass => {
            let kappa = right_limit(|t| t * rate(schedule, diffusion, t)).value();
            if kappa.abs() < 1e-6 {
                Start::Origin
            } else if (kappa - 1.0).abs() < 1e-6 && diffusion.is_zero() {
                Start::Scaled { factor: schedule.c_dot(0.0) }
            } else {
                return Err(Error::singular(0.0, format!("exact path (t·k_t → {kappa})")));
            }
        }
    };

    // Rate to integrate; for the scaled start the 1/t part is handled exactly.
    let shifted = matches!(start, Start::Scaled { .. });
    let k_raw = |t: f64| {
        let k = rate(schedule, diffusion, t);
        if shifted {
            k - 1.0 / t
        } else {
            k
        }
    };
    let k0 = if matches!(start, Start::Given) { k_raw(0.0) } else { right_limit(k_raw).value() };
    if !k0.is_finite() {
        return Err(Error::singular(0.0, "exact path (drift rate diverges at t = 0)"));
    }
    let k = |i_half: usize| -> f64 {
        // Evaluates at t = i_half / (2n).
        if i_half == 0 {
            k0
        } else {
            k_raw(i_half as f64 * 0.5 * h)
        }
    };
    let g = |t: f64| (2.0 * diffusion.at(schedule, t)).sqrt();

    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut log_phi = vec![0.0; n + 1];
    let mut k_prev = k(0);
    for i in 0..n {
        let k_mid = k(2 * i + 1);
        let k_next = k(2 * i + 2);
        log_phi[i + 1] = log_phi[i] + h / 6.0 * (k_prev + 4.0 * k_mid + k_next);
        k_prev = k_next;
    }

    let mut states = Vec::with_capacity((n + 1) * d);
    let mut noise = vec![0.0; n * d];
    match start {
        Start::Scaled { factor } => {
            states.extend(std::iter::repeat(0.0).take(d));
            for i in 1..=n {
                let psi = times[i] * log_phi[i].exp();
                states.extend(z.iter().map(|zi| factor * psi * zi));
            }
        }
        Start::Given | Start::Origin => {
            let x0 = matches!(start, Start::Given);
            let mut integral = vec![0.0; d];
            let mut w_prev = g(0.0) * (-log_phi[0]).exp();
            if !w_prev.is_finite() {
                return Err(Error::singular(0.0, "exact path (diffusion is infinite at t = 0)"));
            }
            states.extend(z.iter().map(|zi| if x0 { *zi } else { 0.0 }));
            for i in 0..n {
                let w_next = g(times[i + 1]) * (-log_phi[i + 1]).exp();
                let phi = log_phi[i + 1].exp();
                let dw = wiener.increment(i);
                for j in 0..d {
                    let inc = 0.5 * (w_prev + w_next) * dw[j];
                    integral[j] += inc;
                    noise[i * d + j] = phi * inc;
                }
                w_prev = w_next;
                for j in 0..d {
                    let base = if x0 { z[j] } else { 0.0 };
                    states.push(phi * (base + integral[j]));
                }
            }
        }
    }

    Ok(Path {
        dim: d,
        times,
        states,
        noise_terms: noise,
        config: None,
        method: "exact".into(),
        schedule: schedule.name().to_string(),
        diffusion: diffusion.label(),
        seed: wiener.seed(),
        drift_evals: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{make_lazy_ode, make_lazy_sde, make_linear};

    #[test]
    fn lazy_ode_without_noise_is_constant() {
        let w = WienerPath::sample(2, 256, 1);
        let z = [0.4, -1.2];
        let p = exact_gaussian_path(&make_lazy_ode(), &DiffusionScale::Zero, &z, &w).unwrap();
        for x in p.states() {
            assert!((x[0] - z[0]).abs() < 1e-12 && (x[1] - z[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_ode_scales_by_root_d() {
        let w = WienerPath::sample(1, 256, 1);
        let p = exact_gaussian_path(&make_linear(), &DiffusionScale::Zero, &[2.0], &w).unwrap();
        for (t, x) in p.times.iter().zip(p.states()) {
            let d = (1.0 - t) * (1.0 - t) + t * t;
            assert!((x[0] - 2.0 * d.sqrt()).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn lazy_sde_ode_uses_initial_drift() {
        // X_t = c_t · X̄_t = (t/d) · √d z.
        let w = WienerPath::sample(1, 256, 1);
        let p = exact_gaussian_path(&make_lazy_sde(), &DiffusionScale::Zero, &[1.5], &w).unwrap();
        for (t, x) in p.times.iter().zip(p.states()) {
            let d = (1.0 - t) * (1.0 - t) + t * t;
            assert!((x[0] - 1.5 * t / d.sqrt()).abs() < 1e-9, "t = {t}: {}", x[0]);
        }
    }

    #[test]
    fn linear_optimal_is_singular() {
        let w = WienerPath::sample(1, 16, 1);
        assert!(matches!(
            exact_gaussian_path(&make_linear(), &DiffusionScale::Optimal, &[0.0], &w),
            Err(Error::SingularTime { .. })
        ));
    }

    #[test]
    fn rate_forms_agree_in_the_interior() {
        for s in [make_linear(), make_lazy_ode(), make_lazy_sde()] {
            for e in [DiffusionScale::Zero, DiffusionScale::Optimal, DiffusionScale::Constant(0.3)] {
                for i in 1..20 {
                    let t = i as f64 / 20.0;
                    let (a, b) = (s.alpha(t), s.beta(t));
                    let other = s.beta_dot(t) / b - (s.eps_star(t) + e.at(&s, t)) / (a * a + b * b);
                    assert!((rate(&s, &e, t) - other).abs() < 1e-10);
                }
            }
        }
    }
}
