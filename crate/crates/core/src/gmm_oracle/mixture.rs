use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

/// One weighted Gaussian component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    weight: f64,
    mean: Vec<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl Component {
    /// Fails unless `cov` is a symmetric positive-definite `d × d` matrix
    /// with `d = mean.len()`.
    pub fn new(weight: f64, mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::invalid("component mean is empty"));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::invalid(format!("covariance is {}x{}, mean has {d} entries", cov.nrows(), cov.ncols())));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(Error::invalid(format!("weight {weight} is not a finite non-negative number")));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("covariance is not positive definite"))?
            .l();
        Ok(Component { weight, mean, cov, chol })
    }

    pub fn diagonal(weight: f64, mean: Vec<f64>, variances: &[f64]) -> Result<Self> {
        let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(variances));
        Component::new(weight, mean, cov)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower Cholesky factor of the covariance.
    pub fn cov_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }
}

/// A finite Gaussian mixture on ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
    components: Vec<Component>,
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::invalid("mixture has no components"))?;
        let dim = first.mean.len();
        if let Some(c) = components.iter().find(|c| c.mean.len() != dim) {
            return Err(Error::invalid(format!("component of dimension {} in a {dim}-dimensional mixture", c.mean.len())));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(GaussianMixture { dim, components })
    }

    /// N(0, I_d).
    pub fn standard_normal(dim: usize) -> Self {
        let c = Component::new(1.0, vec![0.0; dim], DMatrix::identity(dim, dim)).expect("identity is SPD");
        GaussianMixture { dim, components: vec![c] }
    }

    /// A random, reasonably conditioned mixture: means in [−3, 3]^d,
    /// covariances A Aᵀ/d + 0.2 I, weights bounded away from zero.
    pub fn random(dim: usize, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        let mut comps: Vec<Component> = raw
            .iter()
            .map(|w| {
                let mean = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
                let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
                let cov = (&a * a.transpose()) / dim as f64 + DMatrix::identity(dim, dim) * 0.2;
                let cov = (&cov + cov.transpose()) * 0.5;
                Component::new(w / total, mean, cov).expect("random covariance is SPD")
            })
            .collect();
        // Make the weights sum to one exactly.
        let rest: f64 = comps[1..].iter().map(|c| c.weight).sum();
        comps[0].weight = 1.0 - rest;
        GaussianMixture::new(comps).expect("valid random mixture")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// E[X].
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for c in &self.components {
            for (mi, ci) in m.iter_mut().zip(&c.mean) {
                *mi += c.weight * ci;
            }
        }
        m
    }

    /// Cov[X] = Σ w_k (C_k + m_k m_kᵀ) − E[X]E[X]ᵀ.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mu = nalgebra::DVector::from_vec(self.mean());
        let mut second = DMatrix::zeros(self.dim, self.dim);
        for c in &self.components {
            let m = nalgebra::DVector::from_column_slice(&c.mean);
            second += (&c.cov + &m * m.transpose()) * c.weight;
        }
        second - &mu * mu.transpose()
    }

    /// E‖X‖².
    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * (c.cov.trace() + c.mean.iter().map(|v| v * v).sum::<f64>()))
            .sum()
    }

    /// `n` independent draws, reproducible for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_one(&mut rng)).collect()
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                pick = k;
                break;
            }
        }
        let c = &self.components[pick];
        let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        (0..self.dim)
            .map(|i| c.mean[i] + (0..=i).map(|j| c.chol[(i, j)] * z[j]).sum::<f64>())
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    /// Parses the plain-text model format:
    ///
    /// ```text
    /// d K
    /// w=<weight>
    /// m=<d floats>
    /// C=diag <d floats>      or      C=full <d*d floats, row-major>
    /// ...                            (K blocks)
    /// ```
    ///
    /// `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim()))
            .filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let floats = |line: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|tok| tok.parse::<f64>().map_err(|_| perr(line, format!("bad number '{tok}'"))))
                .collect()
        };

        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty model file".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let (d, k) = match head.as_slice() {
            [d, k] => (
                d.parse::<usize>().map_err(|_| perr(hline, format!("bad dimension '{d}'")))?,
                k.parse::<usize>().map_err(|_| perr(hline, format!("bad component count '{k}'")))?,
            ),
            _ => return Err(perr(hline, "header must be 'd K'".into())),
        };
        if d == 0 || k == 0 {
            return Err(perr(hline, "dimension and component count must be positive".into()));
        }

        let mut expect = |key: &str| -> Result<(usize, String)> {
            let (n, l) = lines.next().ok_or_else(|| perr(0, format!("unexpected end of file, expected '{key}='")))?;
            let rest = l
                .strip_prefix(key)
                .and_then(|r| r.trim_start().strip_prefix('='))
                .ok_or_else(|| perr(n, format!("expected '{key}=', got '{l}'")))?;
            Ok((n, rest.trim().to_string()))
        };

        let mut comps = Vec::with_capacity(k);
        for _ in 0..k {
            let (wl, w) = expect("w")?;
            let w: f64 = w.parse().map_err(|_| perr(wl, format!("bad weight '{w}'")))?;
            let (ml, m) = expect("m")?;
            let mean = floats(ml, &m)?;
            if mean.len() != d {
                return Err(perr(ml, format!("mean has {} entries, expected {d}", mean.len())));
            }
            let (cl, c) = expect("C")?;
            let (form, body) = c.split_once(char::is_whitespace).unwrap_or((c.as_str(), ""));
            let vals = floats(cl, body)?;
            let cov = match form {
                "diag" if vals.len() == d => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)),
                "full" if vals.len() == d * d => DMatrix::from_row_slice(d, d, &vals),
                "diag" | "full" => {
                    return Err(perr(cl, format!("C={form} needs {} values, got {}", if form == "diag" { d } else { d * d }, vals.len())))
                }
                other => return Err(perr(cl, format!("covariance form must be diag or full, got '{other}'"))),
            };
            let comp = Component::new(w, mean, cov).map_err(|e| match e {
                Error::InvalidInput(msg) => perr(if msg.starts_with("weight") { wl } else { cl }, msg),
                other => other,
            })?;
            comps.push(comp);
        }
        if let Some((n, l)) = lines.next() {
            return Err(perr(n, format!("unexpected trailing content '{l}'")));
        }
        GaussianMixture::new(comps).map_err(|e| match e {
            Error::InvalidInput(msg) => perr(hline, msg),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "2 2\nw=0.4\nm=-1.5 0.5\nC=diag 0.3 0.5\n\n# second\nw=0.6\nm=1.5 -0.5\nC=full 0.4 0.1 0.1 0.3\n";

    #[test]
    fn parses_model_file() {
        let g = GaussianMixture::parse(TWO).unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.components().len(), 2);
        assert_eq!(g.components()[1].cov()[(0, 1)], 0.1);
        let m = g.mean();
        assert!((m[0] - 0.3).abs() < 1e-15 && (m[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_spd_with_line() {
        let bad = TWO.replace("C=full 0.4 0.1 0.1 0.3", "C=full 0.4 0.9 0.9 0.3");
        match GaussianMixture::parse(&bad) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 9);
                assert!(message.contains("positive definite"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let asym = TWO.replace("C=full 0.4 0.1 0.1 0.3", "C=full 0.4 0.1 0.0 0.3");
        assert!(matches!(GaussianMixture::parse(&asym), Err(Error::Parse { line: 9, .. })));
    }

    #[test]
    fn rejects_bad_weights_and_shapes() {
        let w = TWO.replace("w=0.6", "w=0.7");
        assert!(matches!(GaussianMixture::parse(&w), Err(Error::Parse { line: 1, .. })));
        let m = TWO.replace("m=1.5 -0.5", "m=1.5");
        assert!(matches!(GaussianMixture::parse(&m), Err(Error::Parse { line: 8, .. })));
    }

    #[test]
    fn degenerate_weights_pick_first_component() {
        let g = GaussianMixture::new(vec![
            Component::diagonal(1.0, vec![10.0], &[1e-4]).unwrap(),
            Component::diagonal(0.0, vec![-10.0], &[1e-4]).unwrap(),
        ])
        .unwrap();
        assert!(g.sample(1000, 3).iter().all(|x| x[0] > 9.0));
    }

    #[test]
    fn sampling_is_reproducible() {
        let g = GaussianMixture::parse(TWO).unwrap();
        assert_eq!(g.sample(1, 11), g.sample(1, 11));
        assert_ne!(g.sample(1, 11), g.sample(1, 12));
    }

    #[test]
    fn random_mixtures_are_valid() {
        for seed in 0..20 {
            let g = GaussianMixture::random(3, 4, seed);
            let total: f64 = g.components().iter().map(|c| c.weight()).sum();
            assert!((total - 1.0).abs() <= 1e-15);
        }
    }
}
