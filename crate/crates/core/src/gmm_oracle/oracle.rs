use std::sync::Arc;

use nalgebra::DMatrix;
use smallvec::SmallVec;

use super::GaussianMixture;
use crate::error::{Error, Result};
use crate::field::{DriftField, FieldKind, VectorField};
use crate::schedule::{DiffusionScale, Schedule};

type Buf = SmallVec<[f64; 16]>;

/// One mixture component of law(I_t).
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalComponent {
    pub weight: f64,
    /// β_t m_k.
    pub mean: Vec<f64>,
    /// α_t² I + β_t² C_k.
    pub cov: DMatrix<f64>,
}

/// Per-component parameters of law(I_t) = law(α_t Z + β_t X).
pub fn marginal_params(gmm: &GaussianMixture, schedule: &Schedule, t: f64) -> Vec<MarginalComponent> {
    let (a, b) = (schedule.alpha(t), schedule.beta(t));
    let d = gmm.dim();
    gmm.components()
        .iter()
        .map(|c| MarginalComponent {
            weight: c.weight(),
            mean: c.mean().iter().map(|m| b * m).collect(),
            cov: c.cov() * (b * b) + DMatrix::identity(d, d) * (a * a),
        })
        .collect()
}

/// Log-density of I_t, or the marker for the collapsed law of a point-mass
/// schedule at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDensity {
    Finite(f64),
    PointMass,
}

/// Every oracle quantity at one (t, x).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEval {
    pub t: f64,
    pub x: Vec<f64>,
    pub log_density: f64,
    pub score: Vec<f64>,
    pub eta_z: Vec<f64>,
    pub eta_x: Vec<f64>,
}

/// Factorizations of Σ_k(t) = α²I + β²C_k for the components with positive
/// weight, flattened row-major.
#[derive(Debug, Clone)]
struct TimeFactors {
    alpha: f64,
    beta: f64,
    log_norm: Vec<f64>,
    data_mean: Vec<f64>,
    shifted_mean: Vec<f64>,
    precision: Vec<f64>,
    gain: Vec<f64>,
}

impl TimeFactors {
    /// None when some Σ_k(t) is singular (a point-mass schedule at t = 0).
    fn compute(gmm: &GaussianMixture, schedule: &Schedule, t: f64) -> Option<Self> {
        let d = gmm.dim();
        let (a, b) = (schedule.alpha(t), schedule.beta(t));
        let mut f = TimeFactors {
            alpha: a,
            beta: b,
            log_norm: Vec::new(),
            data_mean: Vec::new(),
            shifted_mean: Vec::new(),
            precision: Vec::new(),
            gain: Vec::new(),
        };
        let log_2pi = (2.0 * std::f64::consts::PI).ln();
        for c in gmm.components().iter().filter(|c| c.weight() > 0.0) {
            let sigma = c.cov() * (b * b) + DMatrix::identity(d, d) * (a * a);
            let chol = sigma.cholesky()?;
            let l = chol.l_dirty();
            let log_det: f64 = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
            if !log_det.is_finite() {
                return None;
            }
            let prec = chol.inverse();
            let gain = c.cov() * &prec * b;
            f.log_norm.push(c.weight().ln() - 0.5 * (log_det + d as f64 * log_2pi));
            f.data_mean.extend_from_slice(c.mean());
            f.shifted_mean.extend(c.mean().iter().map(|m| b * m));
            for i in 0..d {
                for j in 0..d {
                    f.precision.push(prec[(i, j)]);
                    f.gain.push(gain[(i, j)]);
                }
            }
        }
        Some(f)
    }

    /// Writes the score and η_X at x; returns log ρ(t, x).
    fn accumulate(&self, x: &[f64], score: &mut [f64], eta_x: &mut [f64]) -> f64 {
        let d = x.len();
        let k = self.log_norm.len();
        let mut diff: Buf = SmallVec::from_elem(0.0, k * d);
        let mut y: Buf = SmallVec::from_elem(0.0, k * d);
        let mut logp: SmallVec<[f64; 8]> = SmallVec::with_capacity(k);
        for c in 0..k {
            let dc = &mut diff[c * d..(c + 1) * d];
            for i in 0..d {
                dc[i] = x[i] - self.shifted_mean[c * d + i];
            }
            let p = &self.precision[c * d * d..(c + 1) * d * d];
            let mut quad = 0.0;
            for i in 0..d {
                let row = &p[i * d..(i + 1) * d];
                let yi: f64 = row.iter().zip(dc.iter()).map(|(a, b)| a * b).sum();
                y[c * d + i] = yi;
                quad += yi * dc[i];
            }
            logp.push(self.log_norm[c] - 0.5 * quad);
        }
        // Responsibilities in log space.
        let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for lp in logp.iter_mut() {
            *lp = (*lp - max).exp();
            total += *lp;
        }
        score.iter_mut().for_each(|s| *s = 0.0);
        eta_x.iter_mut().for_each(|e| *e = 0.0);
        for c in 0..k {
            let r = logp[c] / total;
            if r == 0.0 {
                continue;
            }
            let g = &self.gain[c * d * d..(c + 1) * d * d];
            let dc = &diff[c * d..(c + 1) * d];
            for i in 0..d {
                score[i] -= r * y[c * d + i];
                let row = &g[i * d..(i + 1) * d];
                let gi: f64 = row.iter().zip(dc.iter()).map(|(a, b)| a * b).sum();
                eta_x[i] += r * (self.data_mean[c * d + i] + gi);
            }
        }
        max + total.ln()
    }
}

struct OracleInner {
    gmm: GaussianMixture,
    schedule: Schedule,
    // Factors at t = i / n for i = 0..=n.
    grid: Option<(usize, Vec<Option<TimeFactors>>)>,
}

/// Analytic score, predictors and drifts of a Gaussian mixture pushed
/// through a schedule.
#[derive(Clone)]
pub struct GmmOracle {
    inner: Arc<OracleInner>,
}

impl GmmOracle {
    pub fn new(gmm: GaussianMixture, schedule: Schedule) -> Self {
        GmmOracle { inner: Arc::new(OracleInner { gmm, schedule, grid: None }) }
    }

    /// Precomputes the covariance factorizations at t = i/n, i = 0..=n.
    /// Evaluations at other times are computed on the fly.
    pub fn with_grid_cache(self, n: usize) -> Self {
        let inner = &self.inner;
        let table = (0..=n)
            .map(|i| TimeFactors::compute(&inner.gmm, &inner.schedule, i as f64 / n as f64))
            .collect();
        GmmOracle {
            inner: Arc::new(OracleInner {
                gmm: inner.gmm.clone(),
                schedule: inner.schedule.clone(),
                grid: Some((n, table)),
            }),
        }
    }

    pub fn gmm(&self) -> &GaussianMixture {
        &self.inner.gmm
    }

    pub fn schedule(&self) -> &Schedule {
        &self.inner.schedule
    }

    pub fn dim(&self) -> usize {
        self.inner.gmm.dim()
    }

    fn with_factors<R>(&self, t: f64, what: &str, f: impl FnOnce(&TimeFactors) -> R) -> Result<R> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid(format!("t = {t} outside [0, 1]")));
        }
        if let Some((n, table)) = &self.inner.grid {
            let pos = t * *n as f64;
            if pos.fract() == 0.0 {
                return match &table[pos as usize] {
                    Some(tf) => Ok(f(tf)),
                    None => Err(Error::singular(t, what)),
                };
            }
        }
        match TimeFactors::compute(&self.inner.gmm, &self.inner.schedule, t) {
            Some(tf) => Ok(f(&tf)),
            None => Err(Error::singular(t, what)),
        }
    }

    pub fn log_density(&self, t: f64, x: &[f64]) -> Result<LogDensity> {
        match self.with_factors(t, "density", |f| {
            let d = x.len();
            let (mut s, mut e) = (vec![0.0; d], vec![0.0; d]);
            f.accumulate(x, &mut s, &mut e)
        }) {
            Ok(v) => Ok(LogDensity::Finite(v)),
            Err(Error::SingularTime { .. }) => Ok(LogDensity::PointMass),
            Err(e) => Err(e),
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<OracleEval> {
        let d = self.dim();
        let (mut score, mut eta_x) = (vec![0.0; d], vec![0.0; d]);
        let (log_density, alpha) = self.with_factors(t, "score", |f| (f.accumulate(x, &mut score, &mut eta_x), f.alpha))?;
        // E[Z | I_t = x] = α Σ r_k Σ_k⁻¹(x − βm_k) = −α s.
        let eta_z = score.iter().map(|s| -alpha * s).collect();
        Ok(OracleEval { t, x: x.to_vec(), log_density, score, eta_z, eta_x })
    }

    /// The oracle field of the given kind.
    pub fn field(&self, kind: FieldKind) -> DriftField {
        DriftField::new(kind.clone(), self.schedule().clone(), Arc::new(OracleField { oracle: self.clone(), kind }))
    }

    /// Shorthand for `field(FieldKind::Drift(diffusion))`.
    pub fn drift(&self, diffusion: DiffusionScale) -> DriftField {
        self.field(FieldKind::Drift(diffusion))
    }
}

pub fn oracle_eval(gmm: &GaussianMixture, schedule: &Schedule, t: f64, x: &[f64]) -> Result<OracleEval> {
    GmmOracle::new(gmm.clone(), schedule.clone()).eval(t, x)
}

pub fn drift_field(gmm: &GaussianMixture, schedule: &Schedule, kind: FieldKind) -> DriftField {
    GmmOracle::new(gmm.clone(), schedule.clone()).field(kind)
}

struct OracleField {
    oracle: GmmOracle,
    kind: FieldKind,
}

impl VectorField for OracleField {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }

    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let s = self.oracle.schedule();
        let d = x.len();
        let mut score: Buf = SmallVec::from_elem(0.0, d);
        let what = self.kind.label();
        let (alpha, _beta) = self.oracle.with_factors(t, &what, |f| {
            match self.kind {
                FieldKind::DataPredictor => f.accumulate(x, &mut score, out),
                _ => {
                    let mut eta_x: Buf = SmallVec::from_elem(0.0, d);
                    let v = f.accumulate(x, &mut score, &mut eta_x);
                    if !matches!(self.kind, FieldKind::Score | FieldKind::NoisePredictor) {
                        out.copy_from_slice(&eta_x);
                    }
                    v
                }
            };
            (f.alpha, f.beta)
        })?;
        match &self.kind {
            FieldKind::Score => out.copy_from_slice(&score),
            FieldKind::NoisePredictor => {
                for i in 0..d {
                    out[i] = -alpha * score[i];
                }
            }
            FieldKind::DataPredictor => {}
            FieldKind::Drift(eps) | FieldKind::BackwardDrift(eps) => {
                let backward = matches!(self.kind, FieldKind::BackwardDrift(_));
                // Reverse-time integration starts from data at t = 1, where the
                // backward drift is as regular as the forward one; t = 0 is
                // where β̇/β blows up and the reverse grid is truncated.
                if backward && !(t > 0.0 && t <= 1.0) {
                    return Err(Error::singular(t, what));
                }
                let e = eps.at(s, t);
                if !e.is_finite() {
                    return Err(Error::singular(t, format!("{what} (diffusion is infinite)")));
                }
                let sign = if backward { -1.0 } else { 1.0 };
                let (ad, bd) = (s.alpha_dot(t), s.beta_dot(t));
                // α̇η_Z + β̇η_X ± εs with η_Z = −αs; `out` holds η_X.
                for i in 0..d {
                    out[i] = ad * (-alpha * score[i]) + bd * out[i] + sign * e * score[i];
                }
            }
        }
        Ok(())
    }
}
