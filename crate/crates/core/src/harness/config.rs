use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gmm_oracle::GaussianMixture;
use crate::solvers::{Scheme, WienerPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dynamics {
    /// Probability-flow ODE, ε ≡ 0.
    Ode,
    /// SDE with the optimal diffusion ε*.
    SdeOptimal,
}

impl Dynamics {
    pub fn label(self) -> &'static str {
        match self {
            Dynamics::Ode => "ode",
            Dynamics::SdeOptimal => "sde",
        }
    }
}

impl fmt::Display for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Dynamics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ode" => Ok(Dynamics::Ode),
            "sde" | "sde-optimal" => Ok(Dynamics::SdeOptimal),
            other => Err(Error::invalid(format!("unknown dynamics '{other}' (expected ode or sde)"))),
        }
    }
}

/// Which schedule a cell samples with. Every cell is driven by the same
/// linear-schedule velocity; `Lazy` converts it to the lazy ODE schedule
/// for ODE cells and to the lazy SDE schedule for SDE cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScheduleChoice {
    Linear,
    Lazy,
}

impl ScheduleChoice {
    pub fn label(self) -> &'static str {
        match self {
            ScheduleChoice::Linear => "linear",
            ScheduleChoice::Lazy => "lazy",
        }
    }
}

impl fmt::Display for ScheduleChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ScheduleChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(ScheduleChoice::Linear),
            "lazy" => Ok(ScheduleChoice::Lazy),
            other => Err(Error::invalid(format!("unknown schedule '{other}' (expected linear or lazy)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceRule {
    /// Mean of the linear and lazy endpoints at the largest step count.
    AverageOfSchedules,
    /// The linear endpoint at the largest step count.
    LinearOnly,
}

impl ReferenceRule {
    pub fn label(self) -> &'static str {
        match self {
            ReferenceRule::AverageOfSchedules => "average",
            ReferenceRule::LinearOnly => "linear-only",
        }
    }
}

impl FromStr for ReferenceRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "average" => Ok(ReferenceRule::AverageOfSchedules),
            "linear-only" | "linear" => Ok(ReferenceRule::LinearOnly),
            other => Err(Error::invalid(format!("unknown reference rule '{other}' (expected average or linear-only)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub gmm: GaussianMixture,
    /// Where the mixture was loaded from, if anywhere.
    pub gmm_path: Option<PathBuf>,
    pub dynamics: Vec<Dynamics>,
    pub schedules: Vec<ScheduleChoice>,
    pub scheme: Scheme,
    pub step_counts: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    pub reference: ReferenceRule,
    pub bootstrap_samples: usize,
    pub n_fine: usize,
}

impl ExperimentConfig {
    /// Desk-scale defaults: both dynamics, both schedules, predictor–corrector,
    /// steps 4, 8, …, 4096, 100 replicates.
    pub fn new(gmm: GaussianMixture) -> Self {
        ExperimentConfig {
            gmm,
            gmm_path: None,
            dynamics: vec![Dynamics::Ode, Dynamics::SdeOptimal],
            schedules: vec![ScheduleChoice::Linear, ScheduleChoice::Lazy],
            scheme: Scheme::PredictorCorrector,
            step_counts: (2..=12).map(|k| 1usize << k).collect(),
            replicates: 100,
            base_seed: 42,
            reference: ReferenceRule::AverageOfSchedules,
            bootstrap_samples: 10_000,
            n_fine: WienerPath::DEFAULT_FINE_STEPS,
        }
    }

    pub fn max_steps(&self) -> usize {
        *self.step_counts.last().expect("validated config has step counts")
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_counts.is_empty() {
            return Err(Error::invalid("no step counts"));
        }
        if !self.step_counts.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("step counts must be strictly increasing"));
        }
        if !self.n_fine.is_power_of_two() {
            return Err(Error::invalid(format!("n_fine = {} is not a power of two", self.n_fine)));
        }
        for &n in &self.step_counts {
            if n == 0 || self.n_fine % n != 0 {
                return Err(Error::IndivisibleGrid { steps: n, n_fine: self.n_fine });
            }
        }
        if self.replicates < 2 {
            return Err(Error::invalid("at least two replicates are required"));
        }
        if self.dynamics.is_empty() || self.schedules.is_empty() {
            return Err(Error::invalid("dynamics and schedules must be non-empty"));
        }
        if self.reference == ReferenceRule::AverageOfSchedules
            && !(self.schedules.contains(&ScheduleChoice::Linear) && self.schedules.contains(&ScheduleChoice::Lazy))
        {
            return Err(Error::invalid("the average reference needs both schedules"));
        }
        if self.reference == ReferenceRule::LinearOnly && !self.schedules.contains(&ScheduleChoice::Linear) {
            return Err(Error::invalid("the linear-only reference needs the linear schedule"));
        }
        if self.bootstrap_samples == 0 {
            return Err(Error::invalid("bootstrap_samples must be positive"));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses the `key = value` format; relative `gmm` paths resolve
    /// against `base_dir`.
    ///
    /// ```text
    /// gmm = two_component.gmm        # required
    /// dynamics = ode, sde
    /// schedules = linear, lazy
    /// scheme = pc                    # em | pc | heun
    /// steps = 4, 8, 16, 32, 64
    /// replicates = 100
    /// base_seed = 42
    /// reference = average            # average | linear-only
    /// bootstrap_samples = 10000
    /// n_fine = 4096
    /// ```
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut gmm: Option<(GaussianMixture, PathBuf)> = None;
        let mut cfg = ExperimentConfig::new(GaussianMixture::standard_normal(1));
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            let int = |v: &str| v.parse::<u64>().map_err(|e| err(format!("{key}: '{v}': {e}")));
            match key {
                "gmm" => {
                    let p = base_dir.join(value);
                    let g = GaussianMixture::load(&p).map_err(|e| err(format!("gmm '{}': {e}", p.display())))?;
                    gmm = Some((g, p));
                }
                "dynamics" => cfg.dynamics = list().map(str::parse).collect::<Result<_>>().map_err(|e| err(e.to_string()))?,
                "schedules" => {
                    cfg.schedules = list().map(str::parse).collect::<Result<_>>().map_err(|e| err(e.to_string()))?
                }
                "scheme" => cfg.scheme = value.parse().map_err(err)?,
                "steps" => cfg.step_counts = list().map(|v| int(v).map(|n| n as usize)).collect::<Result<_>>()?,
                "replicates" => cfg.replicates = int(value)? as usize,
                "base_seed" => cfg.base_seed = int(value)?,
                "reference" => cfg.reference = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "bootstrap_samples" => cfg.bootstrap_samples = int(value)? as usize,
                "n_fine" => cfg.n_fine = int(value)? as usize,
                other => return Err(err(format!("unknown key '{other}'"))),
            }
        }
        let (g, p) = gmm.ok_or_else(|| Error::Parse { line: 0, message: "missing required key 'gmm'".into() })?;
        cfg.gmm = g;
        cfg.gmm_path = Some(p);
        cfg.validate()?;
        Ok(cfg)
    }
}
