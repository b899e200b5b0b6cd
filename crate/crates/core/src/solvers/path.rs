use std::io::Write;

use super::SolverConfig;
use crate::error::Result;

/// A discrete trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major `times.len() × dim`.
    pub states: Vec<f64>,
    /// Realized per-step noise V_n, row-major `(times.len() − 1) × dim`.
    pub noise_terms: Vec<f64>,
    /// Solver settings; `None` for paths not produced by [`super::integrate`].
    pub config: Option<SolverConfig>,
    /// `em`, `pc`, `heun`, `alg1`, `alg2`, `exact`, ...
    pub method: String,
    pub schedule: String,
    pub diffusion: String,
    pub seed: Option<u64>,
    pub drift_evals: usize,
}

impl Path {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, n: usize) -> &[f64] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    pub fn endpoint(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn noise(&self, n: usize) -> &[f64] {
        &self.noise_terms[n * self.dim..(n + 1) * self.dim]
    }

    /// CSV with a `# key=value` metadata block, then `t,x_0,...,x_{d-1}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# scheme={}", self.method)?;
        writeln!(out, "# schedule={}", self.schedule)?;
        writeln!(out, "# eps={}", self.diffusion)?;
        match self.seed {
            Some(s) => writeln!(out, "# seed={s}")?,
            None => writeln!(out, "# seed=none")?,
        }
        writeln!(out, "# steps={}", self.len().saturating_sub(1))?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for (t, x) in self.times.iter().zip(self.states()) {
            let mut rec = vec![t.to_string()];
            rec.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
