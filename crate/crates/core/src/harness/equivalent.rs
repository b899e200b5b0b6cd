use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Dynamics, ScheduleChoice};
use super::convergence::ConvergenceResult;
use super::stats::{isotonic_decreasing, percentile_indices};
use crate::seed::{derive_seed, BOOTSTRAP_STREAM};

/// Step count on a reference curve that attains a target rmse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquivalentSteps {
    Interpolated(f64),
    /// The target is below the curve's minimum: more steps than the largest
    /// step count would be needed.
    AboveRange,
    /// The target is above the curve's maximum: fewer steps than the
    /// smallest step count suffice.
    BelowRange,
}

impl EquivalentSteps {
    /// Interpolated value, with censored values mapped to +∞ / 0.
    pub fn as_f64(self) -> f64 {
        match self {
            EquivalentSteps::Interpolated(v) => v,
            EquivalentSteps::AboveRange => f64::INFINITY,
            EquivalentSteps::BelowRange => 0.0,
        }
    }

    pub fn censoring(self) -> &'static str {
        match self {
            EquivalentSteps::Interpolated(_) => "none",
            EquivalentSteps::AboveRange => "above-max",
            EquivalentSteps::BelowRange => "below-min",
        }
    }
}

/// Where a non-increasing curve `curve` over increasing `steps` reaches
/// `target`, interpolating log(steps) linearly in log(rmse) between the
/// bracketing points. The first crossing wins on flat stretches.
pub fn interpolate_steps(steps: &[usize], curve: &[f64], target: f64) -> EquivalentSteps {
    assert_eq!(steps.len(), curve.len());
    let Some(j) = curve.iter().position(|&r| r <= target) else {
        return EquivalentSteps::AboveRange;
    };
    if curve[j] == target {
        return EquivalentSteps::Interpolated(steps[j] as f64);
    }
    if j == 0 {
        return EquivalentSteps::BelowRange;
    }
    let (r0, r1) = (curve[j - 1], curve[j]);
    let (n0, n1) = ((steps[j - 1] as f64).ln(), (steps[j] as f64).ln());
    // A zero rmse has no logarithm; fall back to linear in rmse there.
    let frac = if r1 > 0.0 { (r0.ln() - target.ln()) / (r0.ln() - r1.ln()) } else { (r0 - target) / (r0 - r1) };
    EquivalentSteps::Interpolated((n0 + frac * (n1 - n0)).exp())
}

/// Equivalent linear-schedule steps for each lazy-schedule step count of one
/// dynamics, from mean curves. The linear curve is isotonically projected
/// first; the lazy values are used as they are.
pub fn equivalent_from_curves(steps: &[usize], linear: &[f64], lazy: &[f64]) -> Vec<EquivalentSteps> {
    let lin = isotonic_decreasing(linear);
    lazy.iter().map(|&target| interpolate_steps(steps, &lin, target)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentRow {
    pub dynamics: Dynamics,
    pub lazy_steps: usize,
    pub estimate: EquivalentSteps,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Equivalent-steps table with paired bootstrap intervals over replicates.
/// Only replicates where every run of the dynamics succeeded are used.
pub fn equivalent_steps(result: &ConvergenceResult) -> Vec<EquivalentRow> {
    let mut out = Vec::new();
    let mut dynamics: Vec<Dynamics> = result.cells.iter().map(|c| c.dynamics).collect();
    dynamics.dedup();
    let steps = &result.step_counts;
    let k = steps.len();
    for (di, &dy) in dynamics.iter().enumerate() {
        let has = |s| result.cells.iter().any(|c| c.dynamics == dy && c.schedule == s);
        if !has(ScheduleChoice::Linear) || !has(ScheduleChoice::Lazy) {
            continue;
        }
        // [step][replicate]
        let lin: Vec<Vec<f64>> = steps.iter().map(|&n| result.rmse_by_replicate(dy, ScheduleChoice::Linear, n)).collect();
        let lazy: Vec<Vec<f64>> = steps.iter().map(|&n| result.rmse_by_replicate(dy, ScheduleChoice::Lazy, n)).collect();
        let complete: Vec<usize> = (0..result.replicates)
            .filter(|&r| (0..k).all(|s| lin[s][r].is_finite() && lazy[s][r].is_finite()))
            .collect();
        if complete.len() < 2 {
            continue;
        }
        let means = |idx: &[usize], m: &[Vec<f64>]| -> Vec<f64> {
            m.iter().map(|row| idx.iter().map(|&r| row[r]).sum::<f64>() / idx.len() as f64).collect()
        };
        let estimate = equivalent_from_curves(steps, &means(&complete, &lin), &means(&complete, &lazy));

        let b = result.bootstrap_samples;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(result.base_seed, (3 << 20) + di as u64, BOOTSTRAP_STREAM));
        let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(b); k];
        let mut idx = vec![0usize; complete.len()];
        for _ in 0..b {
            for slot in idx.iter_mut() {
                *slot = complete[rng.random_range(0..complete.len())];
            }
            let eq = equivalent_from_curves(steps, &means(&idx, &lin), &means(&idx, &lazy));
            for (s, e) in eq.into_iter().enumerate() {
                draws[s].push(e.as_f64());
            }
        }
        let (lo_i, hi_i) = percentile_indices(b, 0.95);
        for (s, mut d) in draws.into_iter().enumerate() {
            d.sort_by(f64::total_cmp);
            out.push(EquivalentRow { dynamics: dy, lazy_steps: steps[s], estimate: estimate[s], ci_low: d[lo_i], ci_high: d[hi_i] });
        }
    }
    out
}
