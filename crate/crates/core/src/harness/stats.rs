use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Positions of the lower and upper percentile in a sorted array of `b`
/// bootstrap statistics.
pub(crate) fn percentile_indices(b: usize, level: f64) -> (usize, usize) {
    let tail = 0.5 * (1.0 - level);
    let lo = (tail * b as f64).floor() as usize;
    let hi = (((1.0 - tail) * b as f64).ceil() as usize).saturating_sub(1);
    (lo.min(b - 1), hi.min(b - 1))
}

/// Percentile bootstrap interval for the mean of `samples` with `b`
/// resamples. Deterministic given `seed`.
pub fn bootstrap_ci(samples: &[f64], b: usize, level: f64, seed: u64) -> (f64, f64) {
    assert!(samples.len() >= 2, "bootstrap needs at least two samples");
    assert!(b > 0 && level > 0.0 && level < 1.0);
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats: Vec<f64> = (0..b)
        .map(|_| (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    stats.sort_by(f64::total_cmp);
    let (lo, hi) = percentile_indices(b, level);
    (stats[lo], stats[hi])
}

/// Least-squares projection onto non-increasing sequences
/// (pool-adjacent-violators, equal weights).
pub fn isotonic_decreasing(ys: &[f64]) -> Vec<f64> {
    // Blocks of (sum, count).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(ys.len());
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s1 / c1 as f64 >= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s1 + s2, c1 + c2);
        }
    }
    blocks.into_iter().flat_map(|(s, c)| std::iter::repeat(s / c as f64).take(c)).collect()
}
