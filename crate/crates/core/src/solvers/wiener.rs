use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Increments of one Brownian realization on a fine uniform grid of [0, 1].
///
/// Coarser grids are obtained by summing blocks, so every step count that
/// divides `n_fine` sees the same underlying path.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    dim: usize,
    n_fine: usize,
    /// Row-major `n_fine × dim`.
    increments: Vec<f64>,
    seed: Option<u64>,
}

impl WienerPath {
    pub const DEFAULT_FINE_STEPS: usize = 4096;

    /// Draws a path with `n_fine` (a power of two) steps.
    pub fn sample(dim: usize, n_fine: usize, seed: u64) -> Self {
        assert!(n_fine.is_power_of_two(), "n_fine must be a power of two, got {n_fine}");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sd = (1.0 / n_fine as f64).sqrt();
        let increments = (0..n_fine * dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        WienerPath { dim, n_fine, increments, seed: Some(seed) }
    }

    /// Wraps given increments (row-major, `n_fine × dim`).
    pub fn from_increments(dim: usize, increments: Vec<f64>) -> Result<Self> {
        if dim == 0 || increments.is_empty() || increments.len() % dim != 0 {
            return Err(Error::invalid(format!("{} increments do not form rows of length {dim}", increments.len())));
        }
        let n_fine = increments.len() / dim;
        if !n_fine.is_power_of_two() {
            return Err(Error::invalid(format!("fine grid of {n_fine} steps is not a power of two")));
        }
        Ok(WienerPath { dim, n_fine, increments, seed: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, i: usize) -> &[f64] {
        &self.increments[i * self.dim..(i + 1) * self.dim]
    }

    /// Block sums onto a grid of `steps` intervals, row-major `steps × dim`.
    pub fn coarsen(&self, steps: usize) -> Result<Vec<f64>> {
        if steps == 0 || self.n_fine % steps != 0 {
            return Err(Error::IndivisibleGrid { steps, n_fine: self.n_fine });
        }
        if steps == self.n_fine {
            return Ok(self.increments.clone());
        }
        let block = self.n_fine / steps;
        let d = self.dim;
        let mut out = vec![0.0; steps * d];
        for (i, row) in self.increments.chunks_exact(d).enumerate() {
            let o = &mut out[(i / block) * d..(i / block + 1) * d];
            for (a, b) in o.iter_mut().zip(row) {
                *a += b;
            }
        }
        Ok(out)
    }

    /// W₁.
    pub fn endpoint(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim];
        for row in self.increments.chunks_exact(self.dim) {
            for (a, b) in w.iter_mut().zip(row) {
                *a += b;
            }
        }
        w
    }
}

/// Increments of `wiener` on a grid of `steps` intervals.
pub fn coarsen_wiener(wiener: &WienerPath, steps: usize) -> Result<Vec<f64>> {
    wiener.coarsen(steps)
}
