//! Interpolation schedules (α, β) and the scalars derived from them.
//!
//! Besides α, β and their derivatives a schedule determines the
//! space-change c = α + β, the time-change u = β / c, the optimal diffusion
//! ε* = α²β̇/β − αα̇ and the log signal-to-noise ratio λ = log(β²/α²).

mod expr;
mod file;
mod validate;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::limits::{right_limit, RightLimit};
use crate::quadrature;

pub use expr::{Expr, ExprError};
pub use file::{load_schedule_file, parse_schedule};
pub use validate::{Check, ValidationReport};

/// Absolute/relative tolerance for quadrature of ∫2ε.
pub const QV_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// α₀ = β₁ = 1, α₁ = β₀ = 0.
    DensityAdmitting,
    /// α₀ = α₁ = β₀ = 0, β₁ = 1: the law at t = 0 is a point mass.
    PointMass,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::DensityAdmitting => "DensityAdmitting",
            ScheduleKind::PointMass => "PointMass",
        })
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
struct CustomFns {
    alpha: ScalarFn,
    beta: ScalarFn,
    alpha_dot: ScalarFn,
    beta_dot: ScalarFn,
}

#[derive(Clone)]
enum Family {
    Linear,
    LazyOde,
    LazySde,
    Custom(CustomFns),
}

/// An interpolation schedule with closed-form derivatives.
#[derive(Clone)]
pub struct Schedule {
    name: String,
    kind: ScheduleKind,
    family: Family,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Schedule").field("name", &self.name).field("kind", &self.kind).finish()
    }
}

#[inline]
fn lazy_d(t: f64) -> f64 {
    (1.0 - t) * (1.0 - t) + t * t
}

/// α = 1 − t, β = t.
pub fn make_linear() -> Schedule {
    Schedule { name: "linear".into(), kind: ScheduleKind::DensityAdmitting, family: Family::Linear }
}

/// Variance-preserving schedule with u_t = t: α = (1−t)/√d, β = t/√d.
pub fn make_lazy_ode() -> Schedule {
    Schedule { name: "lazy-ode".into(), kind: ScheduleKind::DensityAdmitting, family: Family::LazyOde }
}

/// Point-mass schedule with u_t = t and α² + β² = β: α = t(1−t)/d, β = t²/d.
pub fn make_lazy_sde() -> Schedule {
    Schedule { name: "lazy-sde".into(), kind: ScheduleKind::PointMass, family: Family::LazySde }
}

impl Schedule {
    /// A schedule from user-supplied functions. The derivatives must be
    /// exact; nothing is differentiated numerically.
    pub fn custom<A, B, AD, BD>(
        name: impl Into<String>,
        kind: ScheduleKind,
        alpha: A,
        beta: B,
        alpha_dot: AD,
        beta_dot: BD,
    ) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        AD: Fn(f64) -> f64 + Send + Sync + 'static,
        BD: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Schedule {
            name: name.into(),
            kind,
            family: Family::Custom(CustomFns {
                alpha: Arc::new(alpha),
                beta: Arc::new(beta),
                alpha_dot: Arc::new(alpha_dot),
                beta_dot: Arc::new(beta_dot),
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.family, Family::Linear)
    }

    pub fn is_lazy_sde(&self) -> bool {
        matches!(self.family, Family::LazySde)
    }

    /// True for the built-in schedules, all of which have u_t = t.
    pub fn has_identity_time_change(&self) -> bool {
        !matches!(self.family, Family::Custom(_))
    }

    pub fn alpha(&self, t: f64) -> f64 {
        match &self.family {
            Family::Linear => 1.0 - t,
            Family::LazyOde => (1.0 - t) / lazy_d(t).sqrt(),
            Family::LazySde => t * (1.0 - t) / lazy_d(t),
            Family::Custom(f) => (f.alpha)(t),
        }
    }

    pub fn beta(&self, t: f64) -> f64 {
        match &self.family {
            Family::Linear => t,
            Family::LazyOde => t / lazy_d(t).sqrt(),
            Family::LazySde => t * t / lazy_d(t),
            Family::Custom(f) => (f.beta)(t),
        }
    }

    pub fn alpha_dot(&self, t: f64) -> f64 {
        match &self.family {
            Family::Linear => -1.0,
            Family::LazyOde => {
                let d = lazy_d(t);
                -t / (d * d.sqrt())
            }
            Family::LazySde => {
                let d = lazy_d(t);
                (1.0 - 2.0 * t) / (d * d)
            }
            Family::Custom(f) => (f.alpha_dot)(t),
        }
    }

    pub fn beta_dot(&self, t: f64) -> f64 {
        match &self.family {
            Family::Linear => 1.0,
            Family::LazyOde => {
                let d = lazy_d(t);
                (1.0 - t) / (d * d.sqrt())
            }
            Family::LazySde => {
                let d = lazy_d(t);
                2.0 * t * (1.0 - t) / (d * d)
            }
            Family::Custom(f) => (f.beta_dot)(t),
        }
    }

    pub fn c(&self, t: f64) -> f64 {
        self.alpha(t) + self.beta(t)
    }

    pub fn c_dot(&self, t: f64) -> f64 {
        self.alpha_dot(t) + self.beta_dot(t)
    }

    /// u = β / c, with u₀ = 0 where c vanishes.
    pub fn u(&self, t: f64) -> f64 {
        if self.has_identity_time_change() {
            return t;
        }
        let c = self.c(t);
        if c == 0.0 {
            0.0
        } else {
            self.beta(t) / c
        }
    }

    /// u̇ = (β̇c − βċ)/c²; a right-limit where c vanishes.
    pub fn u_dot(&self, t: f64) -> f64 {
        if self.has_identity_time_change() {
            return 1.0;
        }
        let raw = |t: f64| {
            let c = self.c(t);
            (self.beta_dot(t) * c - self.beta(t) * self.c_dot(t)) / (c * c)
        };
        if self.c(t) == 0.0 {
            right_limit(raw).value()
        } else {
            raw(t)
        }
    }

    /// ε* = α²β̇/β − αα̇.
    ///
    /// At a β = 0 endpoint this is the right-limit: +∞ for density-admitting
    /// schedules, finite for point-mass schedules.
    pub fn eps_star(&self, t: f64) -> f64 {
        let raw = |t: f64| {
            let a = self.alpha(t);
            a * a * self.beta_dot(t) / self.beta(t) - a * self.alpha_dot(t)
        };
        if self.beta(t) != 0.0 {
            return raw(t);
        }
        match (&self.family, self.kind) {
            (_, ScheduleKind::DensityAdmitting) => f64::INFINITY,
            // ε* = β̇/2 for this schedule.
            (Family::LazySde, _) => 0.5 * self.beta_dot(t),
            _ => right_limit(raw).value(),
        }
    }

    /// λ = log(β²/α²); −∞ at a point-mass origin where β/α → 0.
    pub fn log_snr(&self, t: f64) -> f64 {
        let (a, b) = (self.alpha(t), self.beta(t));
        if a == 0.0 && b == 0.0 {
            return f64::NEG_INFINITY;
        }
        2.0 * (b.ln() - a.ln())
    }

    /// Inverse of the time-change, by bisection on [0, 1].
    pub fn u_inverse(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::invalid(format!("u = {u} outside [0, 1]")));
        }
        const GRID: usize = 200;
        for i in 1..GRID {
            let t = i as f64 / GRID as f64;
            if !(self.u_dot(t) > 0.0) {
                return Err(Error::NonMonotoneTimeChange { t });
            }
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.u(mid);
            if (v - u).abs() <= 1e-14 {
                return Ok(mid);
            }
            if v < u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * 0.5 {
                break;
            }
        }
        let (ulo, uhi) = (self.u(lo), self.u(hi));
        Ok(if (ulo - u).abs() <= (uhi - u).abs() { lo } else { hi })
    }

    /// All derived scalars at `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> SchedulePoint {
        assert!((0.0..=1.0).contains(&t), "schedule evaluated at t = {t} outside [0, 1]");
        SchedulePoint {
            t,
            alpha: self.alpha(t),
            beta: self.beta(t),
            alpha_dot: self.alpha_dot(t),
            beta_dot: self.beta_dot(t),
            c: self.c(t),
            c_dot: self.c_dot(t),
            u: self.u(t),
            u_dot: self.u_dot(t),
            eps_star: self.eps_star(t),
            log_snr: self.log_snr(t),
        }
    }

    pub fn validate(&self, grid_size: usize) -> ValidationReport {
        validate::validate(self, grid_size)
    }
}

/// Every derived scalar of a schedule at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePoint {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: f64,
    pub beta_dot: f64,
    pub c: f64,
    pub c_dot: f64,
    pub u: f64,
    pub u_dot: f64,
    pub eps_star: f64,
    pub log_snr: f64,
}

pub fn eval(schedule: &Schedule, t: f64) -> SchedulePoint {
    schedule.eval(t)
}

pub fn u_inverse(schedule: &Schedule, u: f64) -> Result<f64> {
    schedule.u_inverse(u)
}

/// A user-supplied diffusion coefficient, optionally with a closed-form
/// ∫ₛᵗ 2ε.
#[derive(Clone)]
pub struct CustomDiffusion {
    label: String,
    rate: ScalarFn,
    qv: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
}

impl CustomDiffusion {
    pub fn new(label: impl Into<String>, rate: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomDiffusion { label: label.into(), rate: Arc::new(rate), qv: None }
    }

    /// Attach a closed form for (s, t) ↦ ∫ₛᵗ 2ε.
    pub fn with_qv(mut self, qv: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.qv = Some(Arc::new(qv));
        self
    }
}

/// The diffusion coefficient ε of the sampling SDE.
#[derive(Clone)]
pub enum DiffusionScale {
    Zero,
    /// ε = ε* of the schedule it is paired with.
    Optimal,
    Constant(f64),
    Custom(CustomDiffusion),
}

impl fmt::Debug for DiffusionScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl fmt::Display for DiffusionScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl DiffusionScale {
    pub fn label(&self) -> String {
        match self {
            DiffusionScale::Zero => "zero".into(),
            DiffusionScale::Optimal => "optimal".into(),
            DiffusionScale::Constant(v) => format!("const:{v}"),
            DiffusionScale::Custom(c) => format!("custom:{}", c.label),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DiffusionScale::Zero) || matches!(self, DiffusionScale::Constant(v) if *v == 0.0)
    }

    /// ε_t for the given schedule.
    pub fn at(&self, schedule: &Schedule, t: f64) -> f64 {
        match self {
            DiffusionScale::Zero => 0.0,
            DiffusionScale::Optimal => schedule.eps_star(t),
            DiffusionScale::Constant(v) => *v,
            DiffusionScale::Custom(c) => (c.rate)(t),
        }
    }

    /// Whether two scales denote the same function of time. Custom scales
    /// compare by label.
    pub fn same_as(&self, other: &DiffusionScale) -> bool {
        match (self, other) {
            (DiffusionScale::Zero, DiffusionScale::Zero) => true,
            (DiffusionScale::Optimal, DiffusionScale::Optimal) => true,
            (DiffusionScale::Constant(a), DiffusionScale::Constant(b)) => a == b,
            (DiffusionScale::Custom(a), DiffusionScale::Custom(b)) => a.label == b.label,
            _ => false,
        }
    }
}

impl std::str::FromStr for DiffusionScale {
    type Err = String;

    /// `zero`, `optimal` or `const:<v>` with v ≥ 0.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "zero" => Ok(DiffusionScale::Zero),
            "optimal" => Ok(DiffusionScale::Optimal),
            other => {
                let v = other
                    .strip_prefix("const:")
                    .ok_or_else(|| format!("unknown diffusion '{other}' (expected zero, optimal or const:<v>)"))?;
                let v: f64 = v.trim().parse().map_err(|_| format!("bad constant diffusion '{v}'"))?;
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(format!("constant diffusion must be finite and non-negative, got {v}"));
                }
                Ok(DiffusionScale::Constant(v))
            }
        }
    }
}

/// ∫ₛᵗ 2ε_r dr, in closed form where one is known and by adaptive
/// quadrature otherwise.
pub fn qv_integral(schedule: &Schedule, diffusion: &DiffusionScale, s: f64, t: f64) -> Result<f64> {
    if !(0.0 <= s && s <= t && t <= 1.0) {
        return Err(Error::invalid(format!("need 0 ≤ s ≤ t ≤ 1, got s = {s}, t = {t}")));
    }
    if s == t {
        return Ok(0.0);
    }
    let quad = |f: &dyn Fn(f64) -> f64| quadrature::integrate(|r| 2.0 * f(r), s, t, QV_TOLERANCE);
    match diffusion {
        DiffusionScale::Zero => Ok(0.0),
        DiffusionScale::Constant(v) => Ok(2.0 * v * (t - s)),
        DiffusionScale::Custom(c) => match &c.qv {
            Some(qv) => Ok(qv(s, t)),
            None => quad(&*c.rate),
        },
        DiffusionScale::Optimal => {
            if s == 0.0 && schedule.kind == ScheduleKind::DensityAdmitting {
                return Ok(f64::INFINITY);
            }
            match schedule.family {
                Family::Linear => Ok(2.0 * (t.ln() - t - s.ln() + s)),
                Family::LazySde => Ok(schedule.beta(t) - schedule.beta(s)),
                // Variance preserving: ε* = β̇/β.
                Family::LazyOde => Ok(2.0 * (schedule.beta(t) / schedule.beta(s)).ln()),
                Family::Custom(_) => quad(&|r| schedule.eps_star(r)),
            }
        }
    }
}

/// Closed form of the right-limit of ε/α at 0 where known, numeric otherwise.
pub(crate) fn eps_over_alpha_limit(schedule: &Schedule, diffusion: &DiffusionScale) -> RightLimit {
    match diffusion {
        DiffusionScale::Zero => RightLimit::Finite(0.0),
        // ε*/α = 1/d → 1.
        DiffusionScale::Optimal if schedule.is_lazy_sde() => RightLimit::Finite(1.0),
        _ => right_limit(|t| diffusion.at(schedule, t) / schedule.alpha(t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_values() {
        let s = make_linear();
        let p = s.eval(0.25);
        assert_eq!((p.alpha, p.beta), (0.75, 0.25));
        assert_abs_diff_eq!(p.eps_star, 3.0, epsilon = 1e-15);
        assert_eq!(s.eval(1.0).eps_star, 0.0);
        assert_eq!(s.eval(0.0).eps_star, f64::INFINITY);
        assert_eq!((s.alpha(0.0), s.beta(0.0)), (1.0, 0.0));
        assert_eq!((s.alpha(1.0), s.beta(1.0)), (0.0, 1.0));
    }

    #[test]
    fn lazy_ode_values() {
        let s = make_lazy_ode();
        let p = s.eval(0.5);
        assert_abs_diff_eq!(p.alpha, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        let p0 = s.eval(0.0);
        assert_eq!((p0.alpha, p0.beta, p0.alpha_dot, p0.beta_dot), (1.0, 0.0, 0.0, 1.0));
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert_abs_diff_eq!(s.beta(t) / s.c(t), t, epsilon = 1e-15);
        }
    }

    #[test]
    fn lazy_sde_values() {
        let s = make_lazy_sde();
        let p = s.eval(0.5);
        assert_abs_diff_eq!(p.alpha, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta_dot, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eps_star, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.c, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.u, 0.5, epsilon = 1e-15);
        let p0 = s.eval(0.0);
        assert_eq!((p0.alpha, p0.beta, p0.eps_star, p0.c_dot), (0.0, 0.0, 0.0, 1.0));
        assert_eq!(p0.log_snr, f64::NEG_INFINITY);
    }

    #[test]
    fn generic_time_change_matches_identity_closed_form() {
        let lin = make_lazy_sde();
        let copy = Schedule::custom(
            "lazy-sde-copy",
            ScheduleKind::PointMass,
            move |t| make_lazy_sde().alpha(t),
            move |t| make_lazy_sde().beta(t),
            move |t| make_lazy_sde().alpha_dot(t),
            move |t| make_lazy_sde().beta_dot(t),
        );
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert_abs_diff_eq!(copy.u(t), lin.u(t), epsilon = 1e-14);
            assert_abs_diff_eq!(copy.u_dot(t), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(copy.u_dot(0.0), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(copy.eps_star(0.0), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn u_inverse_examples() {
        assert_abs_diff_eq!(make_lazy_ode().u_inverse(0.3).unwrap(), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(make_linear().u_inverse(0.5).unwrap(), 0.5, epsilon = 1e-12);
        let sq = Schedule::custom(
            "squares",
            ScheduleKind::DensityAdmitting,
            |t| (1.0 - t) * (1.0 - t),
            |t| t * t,
            |t| -2.0 * (1.0 - t),
            |t| 2.0 * t,
        );
        let t = sq.u_inverse(0.5).unwrap();
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-12);
        let t = sq.u_inverse(0.2).unwrap();
        assert!((sq.u(t) - 0.2).abs() <= 1e-12);
    }

    #[test]
    fn u_inverse_rejects_non_monotone() {
        // β oscillates hard enough for β/c to fall back near t = 1/4.
        let bad = Schedule::custom(
            "bad",
            ScheduleKind::DensityAdmitting,
            |t| 1.0 - t,
            |t| t + 0.2 * (4.0 * std::f64::consts::PI * t).sin(),
            |_| -1.0,
            |t| 1.0 + 0.8 * std::f64::consts::PI * (4.0 * std::f64::consts::PI * t).cos(),
        );
        assert!(matches!(bad.u_inverse(0.4), Err(Error::NonMonotoneTimeChange { .. })));
    }

    #[test]
    fn qv_examples() {
        let lin = make_linear();
        let v = qv_integral(&lin, &DiffusionScale::Optimal, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.386_294_361_119_890_6, epsilon = 1e-12);
        assert_eq!(qv_integral(&lin, &DiffusionScale::Optimal, 0.0, 0.5).unwrap(), f64::INFINITY);
        assert_eq!(qv_integral(&make_lazy_sde(), &DiffusionScale::Optimal, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(qv_integral(&lin, &DiffusionScale::Constant(0.5), 0.25, 0.75).unwrap(), 0.5);
    }

    #[test]
    fn diffusion_parsing() {
        assert!(matches!("zero".parse::<DiffusionScale>(), Ok(DiffusionScale::Zero)));
        assert!(matches!("optimal".parse::<DiffusionScale>(), Ok(DiffusionScale::Optimal)));
        assert!(matches!("const:0.5".parse::<DiffusionScale>(), Ok(DiffusionScale::Constant(v)) if v == 0.5));
        assert!("const:-1".parse::<DiffusionScale>().is_err());
        assert!("huge".parse::<DiffusionScale>().is_err());
    }
}
