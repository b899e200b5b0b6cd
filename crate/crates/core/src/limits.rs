//! Numeric right-limits at t → 0₊.

/// Probe points, ten-fold apart.
pub const PROBES: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RightLimit {
    Finite(f64),
    Divergent,
}

impl RightLimit {
    pub fn value(self) -> f64 {
        match self {
            RightLimit::Finite(v) => v,
            RightLimit::Divergent => f64::INFINITY,
        }
    }
}

/// True when |f| grows by more than 2× at each successive probe. Values
/// that stay at round-off level (cancellation noise) are not a blow-up.
pub fn grows_monotonically(values: &[f64]) -> bool {
    let last = values.last().map_or(0.0, |v| v.abs());
    last > 1e-8 && values.windows(2).all(|w| w[1].abs() > 2.0 * w[0].abs())
}

/// Right-limit of `f` at 0.
///
/// The probe values are Richardson-extrapolated assuming an error of the
/// form a·t + b·t². Non-finite probe values or a monotone blow-up count as
/// divergence.
pub fn right_limit<F: Fn(f64) -> f64>(f: F) -> RightLimit {
    let v = PROBES.map(&f);
    if v.iter().any(|x| !x.is_finite()) || grows_monotonically(&v) {
        return RightLimit::Divergent;
    }
    let r1 = (10.0 * v[1] - v[0]) / 9.0;
    let r2 = (10.0 * v[2] - v[1]) / 9.0;
    RightLimit::Finite((100.0 * r2 - r1) / 99.0)
}
