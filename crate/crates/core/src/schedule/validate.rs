use std::fmt;

use super::{Schedule, ScheduleKind};
use crate::limits::{grows_monotonically, PROBES};

const BOUNDARY_TOL: f64 = 1e-12;

/// One checked condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Grid point or probe at which the condition fails.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub schedule: String,
    pub kind: ScheduleKind,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn passed_count(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn summary(&self) -> String {
        format!("{}: {}/{} checks pass", self.kind, self.passed_count(), self.checks.len())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.summary())?;
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            write!(f, "  [{mark}] {}", c.name)?;
            if !c.passed {
                if let Some(t) = c.witness {
                    write!(f, " (t = {t})")?;
                }
            }
            if !c.detail.is_empty() {
                write!(f, ": {}", c.detail)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check(name: &'static str, failure: Option<(f64, String)>) -> Check {
    match failure {
        None => Check { name, passed: true, witness: None, detail: String::new() },
        Some((t, detail)) => Check { name, passed: false, witness: Some(t), detail },
    }
}

fn interior(grid_size: usize) -> impl Iterator<Item = f64> {
    let n = grid_size - 1;
    (1..n).map(move |i| i as f64 / n as f64)
}

fn first_failure(
    grid_size: usize,
    pred: impl Fn(f64) -> bool,
    describe: impl Fn(f64) -> String,
) -> Option<(f64, String)> {
    interior(grid_size).find(|&t| !pred(t)).map(|t| (t, describe(t)))
}

/// Compares (α₀, α₁, β₀, β₁) with `targets`.
fn boundary(s: &Schedule, targets: [f64; 4]) -> Option<(f64, String)> {
    let names = ["α₀", "α₁", "β₀", "β₁"];
    let times = [0.0, 1.0, 0.0, 1.0];
    let values = [s.alpha(0.0), s.alpha(1.0), s.beta(0.0), s.beta(1.0)];
    (0..4)
        .find(|&i| !((values[i] - targets[i]).abs() <= BOUNDARY_TOL))
        .map(|i| (times[i], format!("{} = {}, expected {}", names[i], values[i], targets[i])))
}

/// Finite derivatives on the closed grid and no blow-up when approaching
/// either endpoint.
fn bounded_derivatives(s: &Schedule, grid_size: usize) -> Option<(f64, String)> {
    let n = grid_size - 1;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let (ad, bd) = (s.alpha_dot(t), s.beta_dot(t));
        if !ad.is_finite() || !bd.is_finite() {
            return Some((t, format!("α̇ = {ad}, β̇ = {bd}")));
        }
    }
    let derivs: [(&str, &dyn Fn(f64) -> f64); 2] = [("α̇", &|t| s.alpha_dot(t)), ("β̇", &|t| s.beta_dot(t))];
    for (end, towards) in [(0.0, 1.0), (1.0, -1.0)] {
        for (name, f) in derivs {
            let probes = PROBES.map(|h| f(end + towards * h));
            if grows_monotonically(&probes) {
                return Some((end, format!("{name} grows without bound near t = {end}: {probes:?}")));
            }
        }
    }
    None
}

pub(super) fn validate(s: &Schedule, grid_size: usize) -> ValidationReport {
    assert!(grid_size >= 3, "validation grid needs at least 3 points");
    let mut checks = Vec::new();
    match s.kind() {
        ScheduleKind::DensityAdmitting => {
            checks.push(check(
                "boundary values α₀ = β₁ = 1, α₁ = β₀ = 0",
                boundary(s, [1.0, 0.0, 0.0, 1.0]),
            ));
            checks.push(check(
                "α̇ < 0 on (0, 1)",
                first_failure(grid_size, |t| s.alpha_dot(t) < 0.0, |t| format!("α̇ = {}", s.alpha_dot(t))),
            ));
            checks.push(check(
                "β̇ > 0 on (0, 1)",
                first_failure(grid_size, |t| s.beta_dot(t) > 0.0, |t| format!("β̇ = {}", s.beta_dot(t))),
            ));
            checks.push(check("bounded derivatives on [0, 1]", bounded_derivatives(s, grid_size)));
        }
        ScheduleKind::PointMass => {
            checks.push(check(
                "boundary values α₀ = α₁ = β₀ = 0, β₁ = 1",
                boundary(s, [0.0, 0.0, 0.0, 1.0]),
            ));
            checks.push(check(
                "α > 0 and β̇ > 0 on (0, 1)",
                first_failure(
                    grid_size,
                    |t| s.alpha(t) > 0.0 && s.beta_dot(t) > 0.0,
                    |t| format!("α = {}, β̇ = {}", s.alpha(t), s.beta_dot(t)),
                ),
            ));

            let ratio = PROBES.map(|t| s.beta(t) / s.alpha(t));
            let vanishes = ratio.iter().all(|r| r.is_finite())
                && ratio.windows(2).all(|w| w[1].abs() < w[0].abs())
                && ratio[2].abs() <= 0.5 * ratio[0].abs();
            checks.push(check(
                "β = o(α) as t → 0₊",
                (!vanishes).then(|| (PROBES[2], format!("β/α at probes: {ratio:?}"))),
            ));

            let ratio = PROBES.map(|t| s.alpha(t).powi(2) / s.beta(t));
            let bounded = ratio.iter().all(|r| r.is_finite()) && !grows_monotonically(&ratio);
            checks.push(check(
                "α² = O(β) as t → 0₊",
                (!bounded).then(|| (PROBES[2], format!("α²/β at probes: {ratio:?}"))),
            ));

            let u_dot = PROBES.map(|t| s.u_dot(t));
            let finite = u_dot.iter().all(|r| r.is_finite()) && !grows_monotonically(&u_dot);
            checks.push(check("u̇₀ < ∞", (!finite).then(|| (PROBES[2], format!("u̇ at probes: {u_dot:?}")))));

            let snr_slope = |t: f64| {
                let a = s.alpha(t);
                (s.beta_dot(t) * a - s.beta(t) * s.alpha_dot(t)) / (a * a)
            };
            checks.push(check(
                "d/dt (β/α) > 0 on (0, 1)",
                first_failure(grid_size, |t| snr_slope(t) > 0.0, |t| format!("d/dt (β/α) = {}", snr_slope(t))),
            ));
        }
    }
    ValidationReport { schedule: s.name().to_string(), kind: s.kind(), checks }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn built_ins_pass() {
        for s in [make_linear(), make_lazy_ode(), make_lazy_sde()] {
            let r = s.validate(101);
            assert!(r.passed(), "{r}");
        }
        assert_eq!(make_lazy_sde().validate(101).summary(), "PointMass: 6/6 checks pass");
        assert_eq!(make_linear().validate(101).summary(), "DensityAdmitting: 4/4 checks pass");
    }

    #[test]
    fn wrong_kind_fails_at_origin() {
        let s = Schedule::custom("lin-as-pm", ScheduleKind::PointMass, |t| 1.0 - t, |t| t, |_| -1.0, |_| 1.0);
        let r = s.validate(101);
        let b = &r.checks[0];
        assert!(!b.passed);
        assert_eq!(b.witness, Some(0.0));
        assert!(b.detail.contains("α₀"));
    }

    #[test]
    fn exploding_derivative_is_rejected() {
        let s = Schedule::custom(
            "quarter-circle",
            ScheduleKind::DensityAdmitting,
            |t| (1.0 - t * t).sqrt(),
            |t| t,
            |t| -t / (1.0 - t * t).sqrt(),
            |_| 1.0,
        );
        let r = s.validate(101);
        assert!(!r.passed());
        let c = r.checks.iter().find(|c| c.name.starts_with("bounded")).unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness, Some(1.0));
    }

    #[test]
    fn non_monotone_beta_is_reported() {
        let s = Schedule::custom(
            "wobbly",
            ScheduleKind::DensityAdmitting,
            |t| 1.0 - t,
            |t| t - 0.3 * (2.0 * std::f64::consts::PI * t).sin(),
            |_| -1.0,
            |t| 1.0 - 0.6 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * t).cos(),
        );
        let r = s.validate(101);
        let c = &r.checks[2];
        assert!(!c.passed);
        assert!(c.witness.unwrap() > 0.0);
    }
}
