use crate::error::Result;
use crate::gmm_oracle::GaussianMixture;
use crate::quadrature;
use crate::schedule::Schedule;

/// The KL integral is truncated to [T_MIN, 1 − T_MIN]; it diverges at t = 0.
pub const T_MIN: f64 = 1e-4;
const TOLERANCE: f64 = 1e-9;

/// Integrand of ∫ ε*_t E‖s − ŝ‖² dt for the score perturbation
/// ŝ(t, x) = s(t, x) + δ x / β_t², i.e. the shift δ y applied in the
/// coordinates y = x / β. With E‖I_t‖² = α² d + β² E‖X‖² this is
/// ε*_t δ² (α_t² d + β_t² E‖X‖²) / β_t⁴.
pub fn kl_integrand(schedule: &Schedule, dim: usize, second_moment: f64, delta: f64, t: f64) -> f64 {
    let (a, b) = (schedule.alpha(t), schedule.beta(t));
    let b2 = b * b;
    schedule.eps_star(t) * delta * delta * (a * a * dim as f64 + b2 * second_moment) / (b2 * b2)
}

/// The truncated integral, computed in the logit variable t = 1/(1 + e^{−y})
/// so the endpoint growth becomes exponential in y rather than a pole.
pub fn kl_integral(gmm: &GaussianMixture, schedule: &Schedule, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    let (dim, m2) = (gmm.dim(), gmm.second_moment());
    let logit = |t: f64| (t / (1.0 - t)).ln();
    quadrature::integrate(
        |y| {
            let t = 1.0 / (1.0 + (-y).exp());
            kl_integrand(schedule, dim, m2, delta, t) * t * (1.0 - t)
        },
        logit(T_MIN),
        logit(1.0 - T_MIN),
        TOLERANCE,
    )
}

/// Grid minimization of (ε* + ε)² / ε over ε > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerCheck {
    pub schedule: String,
    pub t: f64,
    pub eps_star: f64,
    pub argmin: f64,
    pub min_value: f64,
    /// Grid spacing, 1e-3 · max(1, ε*).
    pub resolution: f64,
}

impl MinimizerCheck {
    pub fn passed(&self) -> bool {
        (self.argmin - self.eps_star).abs() <= self.resolution
    }
}

/// Minimizes (ε* + ε)² / ε on the grid ε_j = j·h, h = 1e-3 · max(1, ε*),
/// covering (0, 4ε* + 1]. Returns (argmin, minimum, h).
pub fn scalar_minimizer(eps_star: f64) -> (f64, f64, f64) {
    let h = 1e-3 * eps_star.max(1.0);
    let n = ((4.0 * eps_star + 1.0) / h).ceil() as usize;
    let f = |e: f64| (eps_star + e) * (eps_star + e) / e;
    let mut best = (h, f(h));
    for j in 2..=n {
        let e = j as f64 * h;
        let v = f(e);
        if v < best.1 {
            best = (e, v);
        }
    }
    (best.0, best.1, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlReport {
    pub delta: f64,
    /// (schedule name, truncated integral).
    pub integrals: Vec<(String, f64)>,
    pub minimizer_checks: Vec<MinimizerCheck>,
}

impl KlReport {
    /// (max − min) / max over schedules; 0 when all integrals vanish.
    pub fn relative_spread(&self) -> f64 {
        let vals = self.integrals.iter().map(|(_, v)| *v);
        let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.fold(f64::INFINITY, f64::min);
        if max == 0.0 {
            0.0
        } else {
            (max - min) / max.abs()
        }
    }

    pub fn minimizers_pass(&self) -> bool {
        self.minimizer_checks.iter().all(MinimizerCheck::passed)
    }
}

/// Truncated KL integrals per schedule plus the scalar-minimizer check at
/// t = 0.05, 0.10, …, 0.95 for each schedule.
pub fn kl_invariance_report(gmm: &GaussianMixture, schedules: &[Schedule], delta: f64) -> Result<KlReport> {
    let mut integrals = Vec::new();
    let mut checks = Vec::new();
    for s in schedules {
        integrals.push((s.name().to_string(), kl_integral(gmm, s, delta)?));
        for i in 1..20 {
            let t = i as f64 / 20.0;
            let eps_star = s.eps_star(t);
            let (argmin, min_value, resolution) = scalar_minimizer(eps_star);
            checks.push(MinimizerCheck { schedule: s.name().to_string(), t, eps_star, argmin, min_value, resolution });
        }
    }
    Ok(KlReport { delta, integrals, minimizer_checks: checks })
}
