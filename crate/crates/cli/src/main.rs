use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use interpolant_lab::conversion::{linear_side_diffusion, linear_side_path, path_convert};
use interpolant_lab::gmm_oracle::{GaussianMixture, GmmOracle};
use interpolant_lab::harness::{
    equivalent_steps, kl_invariance_report, run_convergence, within_step_agreement, write_convergence_csv,
    write_equivalent_steps_csv, write_within_step_csv, ExperimentConfig, ReferenceRule,
};
use interpolant_lab::schedule::{load_schedule_file, make_lazy_ode, make_lazy_sde, make_linear, DiffusionScale, Schedule};
use interpolant_lab::seed::{derive_seed, INITIAL_STREAM, WIENER_STREAM};
use interpolant_lab::solvers::{ode_sample_path, sde_sample_path, FirstStepRule, Integrator, Path, Scheme, SolverConfig, WienerPath};
use interpolant_lab::{harness, svg};

#[derive(Parser)]
#[command(name = "interpolant-lab", version, about = "Interpolation schedules, conversions and samplers checked against a Gaussian-mixture oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a schedule's boundary and regularity conditions.
    Validate {
        /// linear | lazy-ode | lazy-sde | file:<path>
        schedule: String,
        /// Number of interior grid points checked.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// Sample one path from the mixture oracle and write CSV + SVG.
    Path(PathArgs),
    /// Explicit Euler on the lazy ODE schedule from the linear velocity.
    Alg1(AlgArgs),
    /// Euler–Maruyama on the lazy SDE schedule from the linear velocity.
    Alg2(AlgArgs),
    /// Run the convergence experiment described by a config file.
    Convergence(ConvergenceArgs),
    /// Compare the truncated KL integral of a score perturbation across schedules.
    KlCheck(KlArgs),
}

#[derive(Args)]
struct PathArgs {
    /// linear | lazy-ode | lazy-sde | file:<path>
    #[arg(long)]
    schedule: String,
    /// zero | optimal | const:<v>
    #[arg(long)]
    eps: String,
    /// Mixture file.
    #[arg(long)]
    gmm: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    /// em | pc | heun
    #[arg(long, default_value = "pc")]
    scheme: String,
    /// Also solve on the linear schedule and write the scaled path.
    #[arg(long, value_parser = ["linear"])]
    convert_from: Option<String>,
    /// Take the first step of the linear optimal SDE exactly.
    #[arg(long)]
    lazy_first_step: bool,
    /// Fine Wiener grid (power of two divisible by --steps).
    #[arg(long, default_value_t = WienerPath::DEFAULT_FINE_STEPS)]
    n_fine: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct AlgArgs {
    #[arg(long)]
    gmm: PathBuf,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = WienerPath::DEFAULT_FINE_STEPS)]
    n_fine: usize,
    /// Write the path CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's reference rule: average | linear-only.
    #[arg(long)]
    reference: Option<String>,
    /// Write outputs even if some cells failed.
    #[arg(long)]
    allow_partial: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct KlArgs {
    #[arg(long)]
    delta: f64,
    /// Mixture file; a 2-D standard Gaussian if omitted.
    #[arg(long)]
    gmm: Option<PathBuf>,
    /// Comma-separated schedules to compare.
    #[arg(long, default_value = "linear,lazy-ode")]
    schedules: String,
}

fn parse_schedule_arg(s: &str) -> Result<Schedule> {
    Ok(match s {
        "linear" => make_linear(),
        "lazy-ode" => make_lazy_ode(),
        "lazy-sde" => make_lazy_sde(),
        other => match other.strip_prefix("file:") {
            Some(p) => load_schedule_file(p).with_context(|| format!("loading schedule file {p}"))?,
            None => bail!("unknown schedule '{other}' (expected linear, lazy-ode, lazy-sde or file:<path>)"),
        },
    })
}

fn load_gmm(path: &FsPath) -> Result<GaussianMixture> {
    GaussianMixture::load(path).with_context(|| format!("loading mixture {}", path.display()))
}

fn write_path(path: &Path, file: &FsPath) -> Result<()> {
    let f = fs::File::create(file).with_context(|| format!("creating {}", file.display()))?;
    path.write_csv(std::io::BufWriter::new(f))?;
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_validate(schedule: &str, grid: usize) -> Result<bool> {
    let s = parse_schedule_arg(schedule)?;
    let report = s.validate(grid);
    print!("{report}");
    println!("{}", report.summary());
    Ok(report.passed())
}

fn cmd_path(a: &PathArgs) -> Result<()> {
    let schedule = parse_schedule_arg(&a.schedule)?;
    let eps: DiffusionScale = a.eps.parse().map_err(anyhow::Error::msg)?;
    let scheme: Scheme = a.scheme.parse().map_err(anyhow::Error::msg)?;
    let gmm = load_gmm(&a.gmm)?;
    let rule = if a.lazy_first_step { FirstStepRule::LazyFirstStep } else { FirstStepRule::Standard };

    let dim = gmm.dim();
    let wiener = WienerPath::sample(dim, a.n_fine, derive_seed(a.seed, 0, WIENER_STREAM));
    let z = harness::initial_draw(dim, derive_seed(a.seed, 0, INITIAL_STREAM));

    let field = GmmOracle::new(gmm.clone(), schedule.clone()).drift(eps.clone());
    let path = Integrator::new(&field, SolverConfig::new(scheme, a.steps).with_first_step(rule))?.run(&z, &wiener)?;

    let converted = match a.convert_from.as_deref() {
        Some(_) => {
            let eps_bar = linear_side_diffusion(&schedule, &eps);
            let linear = GmmOracle::new(gmm, make_linear()).drift(eps_bar.clone());
            let linear_rule = if matches!(eps_bar, DiffusionScale::Optimal) { FirstStepRule::LazyFirstStep } else { FirstStepRule::Standard };
            let lin = linear_side_path(&linear, &schedule, SolverConfig::new(scheme, a.steps).with_first_step(linear_rule), &z, &wiener)?;
            Some(path_convert(&lin, &schedule)?)
        }
        None => None,
    };

    fs::create_dir_all(&a.out)?;
    write_path(&path, &a.out.join("path.csv"))?;
    let mut overlay: Vec<(&str, &Path)> = vec![(schedule.name(), &path)];
    if let Some(c) = &converted {
        write_path(c, &a.out.join("path_converted.csv"))?;
        overlay.push(("converted", c));
    }
    fs::write(a.out.join("path.svg"), svg::path_plot(&overlay).to_svg())?;
    println!("{}", fmt_vec(path.endpoint()));
    if let Some(c) = &converted {
        println!("converted {}", fmt_vec(c.endpoint()));
    }
    Ok(())
}

fn cmd_alg(a: &AlgArgs, sde: bool) -> Result<()> {
    let gmm = load_gmm(&a.gmm)?;
    let dim = gmm.dim();
    let velocity = GmmOracle::new(gmm, make_linear()).drift(DiffusionScale::Zero);
    let path = if sde {
        let wiener = WienerPath::sample(dim, a.n_fine, derive_seed(a.seed, 0, WIENER_STREAM));
        sde_sample_path(&velocity, a.steps, &wiener)?
    } else {
        let z = harness::initial_draw(dim, derive_seed(a.seed, 0, INITIAL_STREAM));
        ode_sample_path(&velocity, a.steps, &z)?
    };
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        write_path(&path, &dir.join(if sde { "alg2.csv" } else { "alg1.csv" }))?;
    }
    println!("{}", fmt_vec(path.endpoint()));
    Ok(())
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config).with_context(|| format!("loading config {}", a.config.display()))?;
    if let Some(r) = &a.reference {
        cfg.reference = r.parse::<ReferenceRule>()?;
        cfg.validate()?;
    }
    let result = run_convergence(&cfg)?;
    if !result.failures.is_empty() {
        for f in result.failures.iter().take(10) {
            eprintln!("failed: {} {} steps={} replicate={}: {}", f.dynamics, f.schedule, f.steps, f.replicate, f.message);
        }
        if !a.allow_partial {
            bail!("{} runs failed (use --allow-partial to write the remaining results)", result.failures.len());
        }
    }
    let eq = equivalent_steps(&result);
    let within = within_step_agreement(&result);

    fs::create_dir_all(&a.out)?;
    let create = |name: &str| -> Result<std::io::BufWriter<fs::File>> {
        let p = a.out.join(name);
        Ok(std::io::BufWriter::new(fs::File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    };
    write_convergence_csv(&result, create("convergence.csv")?)?;
    write_equivalent_steps_csv(&eq, create("equivalent_steps.csv")?)?;
    write_within_step_csv(&within, create("within_step.csv")?)?;
    fs::write(a.out.join("convergence.svg"), svg::convergence_plot(&result).to_svg())?;
    fs::write(a.out.join("equivalent_steps.svg"), svg::equivalent_steps_plot(&eq).to_svg())?;

    for g in &result.aggregates {
        println!(
            "{:<4} {:<7} {:>5} mean {:.6e} [{:.6e}, {:.6e}]",
            g.dynamics.label(),
            g.schedule.label(),
            g.steps,
            g.mean,
            g.ci_low,
            g.ci_high
        );
    }
    Ok(())
}

fn cmd_kl(a: &KlArgs) -> Result<()> {
    let gmm = match &a.gmm {
        Some(p) => load_gmm(p)?,
        None => GaussianMixture::standard_normal(2),
    };
    let schedules = a.schedules.split(',').map(|s| parse_schedule_arg(s.trim())).collect::<Result<Vec<_>>>()?;
    let report = kl_invariance_report(&gmm, &schedules, a.delta)?;
    for (name, v) in &report.integrals {
        println!("{name} {v:.10e}");
    }
    println!("relative spread {:.3e}", report.relative_spread());
    let bad = report.minimizer_checks.iter().filter(|c| !c.passed()).count();
    println!("scalar minimizer: {}/{} nodes at eps*", report.minimizer_checks.len() - bad, report.minimizer_checks.len());
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("INTERPOLANT_LAB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("INTERPOLANT_LAB_THREADS='{v}'"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<bool> {
        configure_threads()?;
        match &cli.command {
            Command::Validate { schedule, grid } => return cmd_validate(schedule, *grid),
            Command::Path(a) => cmd_path(a)?,
            Command::Alg1(a) => cmd_alg(a, false)?,
            Command::Alg2(a) => cmd_alg(a, true)?,
            Command::Convergence(a) => cmd_convergence(a)?,
            Command::KlCheck(a) => cmd_kl(a)?,
        }
        Ok(true)
    };
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
