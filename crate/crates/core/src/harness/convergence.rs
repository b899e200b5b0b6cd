use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{Dynamics, ExperimentConfig, ReferenceRule, ScheduleChoice};
use super::stats::{bootstrap_ci, mean, median};
use crate::conversion::{intra_convert, linear_to_lazy_ode_velocity, linear_to_lazy_sde_drift};
use crate::error::{Error, Result};
use crate::field::{DriftField, FieldKind};
use crate::gmm_oracle::GmmOracle;
use crate::schedule::{make_linear, DiffusionScale};
use crate::seed::{derive_seed, BOOTSTRAP_STREAM, INITIAL_STREAM, WIENER_STREAM};
use crate::solvers::{FirstStepRule, Integrator, Scheme, SolverConfig, WienerPath};

/// One (dynamics, schedule) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub dynamics: Dynamics,
    pub schedule: ScheduleChoice,
}

/// Seeds consumed by one replicate; every cell of the replicate shares them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateSeeds {
    pub replicate: usize,
    pub wiener: u64,
    pub initial: u64,
}

impl ReplicateSeeds {
    pub fn derive(base: u64, replicate: usize) -> Self {
        ReplicateSeeds {
            replicate,
            wiener: derive_seed(base, replicate as u64, WIENER_STREAM),
            initial: derive_seed(base, replicate as u64, INITIAL_STREAM),
        }
    }
}

/// The initial Gaussian draw z for a seed.
pub fn initial_draw(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub dynamics: Dynamics,
    pub schedule: ScheduleChoice,
    pub steps: usize,
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub dynamics: Dynamics,
    pub schedule: ScheduleChoice,
    pub scheme: Scheme,
    pub steps: usize,
    pub replicate: usize,
    pub rmse: f64,
}

/// Summary of one (dynamics, schedule, steps) cell over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub dynamics: Dynamics,
    pub schedule: ScheduleChoice,
    pub steps: usize,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub scheme: Scheme,
    pub step_counts: Vec<usize>,
    pub replicates: usize,
    pub dim: usize,
    pub base_seed: u64,
    pub bootstrap_samples: usize,
    pub reference: ReferenceRule,
    pub cells: Vec<Cell>,
    pub seeds: Vec<ReplicateSeeds>,
    pub failures: Vec<CellFailure>,
    pub rows: Vec<ConvergenceRow>,
    pub aggregates: Vec<Aggregate>,
    /// [replicate][cell][step][coordinate], NaN where the cell failed.
    endpoints: Vec<f64>,
}

/// rmse(v, w) = ‖v − w‖ / √d.
pub fn rmse(v: &[f64], w: &[f64]) -> f64 {
    let ss: f64 = v.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / v.len() as f64).sqrt()
}

/// The drift field and first-step rule used for a cell, all derived from
/// the oracle's linear-schedule velocity.
pub fn cell_field(linear_velocity: &DriftField, cell: Cell) -> Result<(DriftField, FirstStepRule)> {
    Ok(match (cell.dynamics, cell.schedule) {
        (Dynamics::Ode, ScheduleChoice::Linear) => (linear_velocity.clone(), FirstStepRule::Standard),
        (Dynamics::Ode, ScheduleChoice::Lazy) => (linear_to_lazy_ode_velocity(linear_velocity)?, FirstStepRule::Standard),
        (Dynamics::SdeOptimal, ScheduleChoice::Linear) => (
            intra_convert(linear_velocity, FieldKind::Drift(DiffusionScale::Optimal))?,
            FirstStepRule::LazyFirstStep,
        ),
        (Dynamics::SdeOptimal, ScheduleChoice::Lazy) => (linear_to_lazy_sde_drift(linear_velocity)?, FirstStepRule::Standard),
    })
}

/// Runs every (dynamics, schedule, steps) cell for every replicate and
/// scores endpoints against the reference rule. Replicates run on the
/// rayon pool; results do not depend on the number of threads.
pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceResult> {
    config.validate()?;
    let dim = config.gmm.dim();
    let oracle = GmmOracle::new(config.gmm.clone(), make_linear()).with_grid_cache(config.n_fine);
    let velocity = oracle.drift(DiffusionScale::Zero);

    let mut cells = Vec::new();
    for &dynamics in &config.dynamics {
        for &schedule in &config.schedules {
            cells.push(Cell { dynamics, schedule });
        }
    }
    // integrators[cell][step], or the reason the cell cannot run at all.
    let integrators: Vec<Vec<std::result::Result<Integrator, String>>> = cells
        .iter()
        .map(|&cell| match cell_field(&velocity, cell) {
            Ok((field, rule)) => config
                .step_counts
                .iter()
                .map(|&n| {
                    Integrator::new(&field, SolverConfig::new(config.scheme, n).with_first_step(rule)).map_err(|e| e.to_string())
                })
                .collect(),
            Err(e) => config.step_counts.iter().map(|_| Err(e.to_string())).collect(),
        })
        .collect();

    let k = config.step_counts.len();
    let per_rep = cells.len() * k * dim;
    let seeds: Vec<ReplicateSeeds> = (0..config.replicates).map(|r| ReplicateSeeds::derive(config.base_seed, r)).collect();

    let outputs: Vec<(Vec<f64>, Vec<CellFailure>)> = seeds
        .par_iter()
        .map(|s| {
            let wiener = WienerPath::sample(dim, config.n_fine, s.wiener);
            let z = initial_draw(dim, s.initial);
            let mut ends = vec![f64::NAN; per_rep];
            let mut failures = Vec::new();
            for (ci, cell) in cells.iter().enumerate() {
                for (si, &steps) in config.step_counts.iter().enumerate() {
                    let run = integrators[ci][si].as_ref().map_err(Clone::clone).and_then(|integ| {
                        let path = integ.run(&z, &wiener).map_err(|e| e.to_string())?;
                        if path.seed != Some(s.wiener) {
                            return Err(format!("path consumed seed {:?}, replicate owns {}", path.seed, s.wiener));
                        }
                        Ok(path.endpoint().to_vec())
                    });
                    match run {
                        Ok(x) => {
                            let at = (ci * k + si) * dim;
                            ends[at..at + dim].copy_from_slice(&x);
                        }
                        Err(message) => failures.push(CellFailure {
                            dynamics: cell.dynamics,
                            schedule: cell.schedule,
                            steps,
                            replicate: s.replicate,
                            message,
                        }),
                    }
                }
            }
            (ends, failures)
        })
        .collect();

    let mut endpoints = Vec::with_capacity(per_rep * config.replicates);
    let mut failures = Vec::new();
    for (e, f) in outputs {
        endpoints.extend(e);
        failures.extend(f);
    }
    let mut result = ConvergenceResult {
        scheme: config.scheme,
        step_counts: config.step_counts.clone(),
        replicates: config.replicates,
        dim,
        base_seed: config.base_seed,
        bootstrap_samples: config.bootstrap_samples,
        reference: config.reference,
        cells,
        seeds,
        failures,
        rows: Vec::new(),
        aggregates: Vec::new(),
        endpoints,
    };
    result.score();
    Ok(result)
}

impl ConvergenceResult {
    fn cell_index(&self, dynamics: Dynamics, schedule: ScheduleChoice) -> Option<usize> {
        self.cells.iter().position(|c| c.dynamics == dynamics && c.schedule == schedule)
    }

    fn step_index(&self, steps: usize) -> Option<usize> {
        self.step_counts.iter().position(|&n| n == steps)
    }

    /// Endpoint of one run, `None` if that run failed.
    pub fn endpoint(&self, replicate: usize, dynamics: Dynamics, schedule: ScheduleChoice, steps: usize) -> Option<&[f64]> {
        let ci = self.cell_index(dynamics, schedule)?;
        let si = self.step_index(steps)?;
        let at = ((replicate * self.cells.len() + ci) * self.step_counts.len() + si) * self.dim;
        let x = self.endpoints.get(at..at + self.dim)?;
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }

    /// The reference endpoint of one replicate for one dynamics.
    pub fn reference_endpoint(&self, replicate: usize, dynamics: Dynamics) -> Option<Vec<f64>> {
        let n = *self.step_counts.last()?;
        let lin = self.endpoint(replicate, dynamics, ScheduleChoice::Linear, n)?;
        match self.reference {
            ReferenceRule::LinearOnly => Some(lin.to_vec()),
            ReferenceRule::AverageOfSchedules => {
                let lazy = self.endpoint(replicate, dynamics, ScheduleChoice::Lazy, n)?;
                Some(lin.iter().zip(lazy).map(|(a, b)| 0.5 * (a + b)).collect())
            }
        }
    }

    /// The same runs scored against another reference rule. Endpoints are
    /// untouched.
    pub fn with_reference(&self, reference: ReferenceRule) -> ConvergenceResult {
        let mut r = self.clone();
        r.reference = reference;
        r.score();
        r
    }

    /// Per-replicate rmse of one cell, in replicate order; NaN where the run
    /// or its reference is missing.
    pub fn rmse_by_replicate(&self, dynamics: Dynamics, schedule: ScheduleChoice, steps: usize) -> Vec<f64> {
        (0..self.replicates)
            .map(|r| {
                match (self.endpoint(r, dynamics, schedule, steps), self.reference_endpoint(r, dynamics)) {
                    (Some(x), Some(reference)) => rmse(x, &reference),
                    _ => f64::NAN,
                }
            })
            .collect()
    }

    pub fn aggregate(&self, dynamics: Dynamics, schedule: ScheduleChoice, steps: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.dynamics == dynamics && a.schedule == schedule && a.steps == steps)
    }

    fn score(&mut self) {
        let mut rows = Vec::new();
        let mut aggregates = Vec::new();
        for (ci, cell) in self.cells.iter().enumerate() {
            for (si, &steps) in self.step_counts.iter().enumerate() {
                let per_rep = self.rmse_by_replicate(cell.dynamics, cell.schedule, steps);
                for (replicate, &e) in per_rep.iter().enumerate() {
                    if e.is_finite() {
                        rows.push(ConvergenceRow {
                            dynamics: cell.dynamics,
                            schedule: cell.schedule,
                            scheme: self.scheme,
                            steps,
                            replicate,
                            rmse: e,
                        });
                    }
                }
                let ok: Vec<f64> = per_rep.into_iter().filter(|e| e.is_finite()).collect();
                if ok.len() >= 2 {
                    let seed = derive_seed(self.base_seed, (ci * self.step_counts.len() + si) as u64, BOOTSTRAP_STREAM);
                    let (lo, hi) = bootstrap_ci(&ok, self.bootstrap_samples, 0.95, seed);
                    aggregates.push(Aggregate {
                        dynamics: cell.dynamics,
                        schedule: cell.schedule,
                        steps,
                        count: ok.len(),
                        mean: mean(&ok),
                        median: median(&ok),
                        ci_low: lo,
                        ci_high: hi,
                    });
                }
            }
        }
        self.rows = rows;
        self.aggregates = aggregates;
    }
}

/// Agreement between the linear and lazy endpoints at equal step counts.
#[derive(Debug, Clone, PartialEq)]
pub struct WithinStepRow {
    pub dynamics: Dynamics,
    pub steps: usize,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Per-replicate values, NaN where a run failed.
    pub per_replicate: Vec<f64>,
}

pub fn within_step_agreement(result: &ConvergenceResult) -> Vec<WithinStepRow> {
    let mut out = Vec::new();
    let mut dynamics: Vec<Dynamics> = result.cells.iter().map(|c| c.dynamics).collect();
    dynamics.dedup();
    for (di, &dy) in dynamics.iter().enumerate() {
        if result.cell_index(dy, ScheduleChoice::Linear).is_none() || result.cell_index(dy, ScheduleChoice::Lazy).is_none() {
            continue;
        }
        for (si, &steps) in result.step_counts.iter().enumerate() {
            let per_replicate: Vec<f64> = (0..result.replicates)
                .map(|r| {
                    match (
                        result.endpoint(r, dy, ScheduleChoice::Linear, steps),
                        result.endpoint(r, dy, ScheduleChoice::Lazy, steps),
                    ) {
                        (Some(a), Some(b)) => rmse(a, b),
                        _ => f64::NAN,
                    }
                })
                .collect();
            let ok: Vec<f64> = per_replicate.iter().copied().filter(|v| v.is_finite()).collect();
            if ok.len() < 2 {
                continue;
            }
            let seed = derive_seed(result.base_seed, (1 << 20) + (di * result.step_counts.len() + si) as u64, BOOTSTRAP_STREAM);
            let (lo, hi) = bootstrap_ci(&ok, result.bootstrap_samples, 0.95, seed);
            out.push(WithinStepRow {
                dynamics: dy,
                steps,
                count: ok.len(),
                mean: mean(&ok),
                median: median(&ok),
                ci_low: lo,
                ci_high: hi,
                per_replicate,
            });
        }
    }
    out
}

/// Paired comparison of SDE against ODE rmse for one schedule at one
/// step count.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsGap {
    pub schedule: ScheduleChoice,
    pub steps: usize,
    pub median_sde: f64,
    pub median_ode: f64,
    /// Mean over replicates of rmse_SDE − rmse_ODE.
    pub mean_difference: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl DynamicsGap {
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }
}

pub fn dynamics_gap(result: &ConvergenceResult, schedule: ScheduleChoice) -> Result<Vec<DynamicsGap>> {
    if result.cell_index(Dynamics::Ode, schedule).is_none() || result.cell_index(Dynamics::SdeOptimal, schedule).is_none() {
        return Err(Error::invalid(format!("both dynamics are needed for schedule {schedule}")));
    }
    let mut out = Vec::new();
    for (si, &steps) in result.step_counts.iter().enumerate() {
        let sde = result.rmse_by_replicate(Dynamics::SdeOptimal, schedule, steps);
        let ode = result.rmse_by_replicate(Dynamics::Ode, schedule, steps);
        let pairs: Vec<(f64, f64)> = sde.into_iter().zip(ode).filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
        if pairs.len() < 2 {
            continue;
        }
        let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
        let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let o: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let seed = derive_seed(result.base_seed, (2 << 20) + si as u64, BOOTSTRAP_STREAM);
        let (lo, hi) = bootstrap_ci(&diffs, result.bootstrap_samples, 0.95, seed);
        out.push(DynamicsGap {
            schedule,
            steps,
            median_sde: median(&s),
            median_ode: median(&o),
            mean_difference: mean(&diffs),
            ci_low: lo,
            ci_high: hi,
        });
    }
    Ok(out)
}
