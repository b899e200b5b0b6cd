use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const GMM_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data");

fn gmm(name: &str) -> PathBuf {
    PathBuf::from(GMM_DIR).join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interpolant-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn endpoint(line: &str) -> Vec<f64> {
    line.split_whitespace().map(|v| v.parse().unwrap()).collect()
}

fn polylines(svg: &str) -> Vec<usize> {
    svg.split("<polyline").skip(1).map(|rest| {
        let pts = rest.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        pts.split_whitespace().count()
    }).collect()
}

#[test]
fn help_exits_zero_for_every_command() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    for cmd in ["validate", "path", "alg1", "alg2", "convergence", "kl-check"] {
        assert_eq!(run(&[cmd, "--help"]).status.code(), Some(0), "{cmd}");
    }
}

#[test]
fn usage_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["path", "--schedule", "linear", "--eps", "zero", "--bogus", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let o = run(&["alg2", "--gmm", gmm("standard_normal.gmm").to_str().unwrap(), "--steps", "two", "--seed", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn validate_reports_checks() {
    let o = run(&["validate", "lazy-sde"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PointMass: 6/6 checks pass"));
    assert_eq!(run(&["validate", "linear"]).status.code(), Some(0));
    assert_eq!(run(&["validate", "cosine"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("circle.sched");
    fs::write(&bad, "name=circle\nkind=density\nalpha=sqrt(1-t^2)\nbeta=t\nalpha_dot=-t/sqrt(1-t^2)\nbeta_dot=1\n").unwrap();
    let o = run(&["validate", &format!("file:{}", bad.display())]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn lazy_ode_path_of_standard_gaussian_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let g = gmm("standard_normal.gmm");
    let o = run(&[
        "path", "--schedule", "lazy-ode", "--eps", "zero", "--gmm", g.to_str().unwrap(), "--steps", "16", "--seed", "3",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('t'))
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 17);
    assert!(rows.iter().all(|r| r.iter().zip(&rows[0]).all(|(a, b)| (a - b).abs() < 1e-12)));
    let svg = fs::read_to_string(dir.path().join("path.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 800 600""#));
    assert_eq!(polylines(&svg), vec![17, 17]);
}

#[test]
fn ode_endpoints_agree_across_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let g = gmm("two_component.gmm");
    let ends: Vec<Vec<f64>> = ["linear", "lazy-ode", "lazy-sde"]
        .iter()
        .map(|s| {
            let o = run(&[
                "path", "--schedule", s, "--eps", "zero", "--gmm", g.to_str().unwrap(), "--steps", "4096", "--seed", "11",
                "--out", dir.path().join(s).to_str().unwrap(),
            ]);
            assert_eq!(o.status.code(), Some(0), "{s}: {}", stderr(&o));
            endpoint(stdout(&o).lines().next().unwrap())
        })
        .collect();
    for e in &ends[1..] {
        // The point-mass start of lazy-sde converges at first order: 2e-3 at 512 steps.
        assert!(e.iter().zip(&ends[0]).all(|(a, b)| (a - b).abs() < 5e-4), "{ends:?}");
    }
}

#[test]
fn converted_path_is_written_and_close() {
    let dir = tempfile::tempdir().unwrap();
    let g = gmm("two_component.gmm");
    let o = run(&[
        "path", "--schedule", "lazy-sde", "--eps", "optimal", "--gmm", g.to_str().unwrap(), "--steps", "1024", "--seed", "2",
        "--convert-from", "linear", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let direct = endpoint(lines.next().unwrap());
    let converted = endpoint(lines.next().unwrap().strip_prefix("converted ").unwrap());
    assert!(direct.iter().zip(&converted).all(|(a, b)| (a - b).abs() < 1e-3), "{direct:?} vs {converted:?}");
    assert!(dir.path().join("path_converted.csv").exists());
    assert_eq!(polylines(&fs::read_to_string(dir.path().join("path.svg")).unwrap()).len(), 4);
}

#[test]
fn linear_optimal_needs_the_lazy_first_step() {
    let dir = tempfile::tempdir().unwrap();
    let g = gmm("standard_normal.gmm");
    let base = ["path", "--schedule", "linear", "--eps", "optimal", "--gmm", g.to_str().unwrap(), "--steps", "8", "--seed", "1", "--out"];
    let mut args = base.to_vec();
    let out = dir.path().to_str().unwrap();
    args.push(out);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("infinite"), "{}", stderr(&o));
    args.push("--lazy-first-step");
    assert_eq!(run(&args).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_one() {
    let o = run(&["alg1", "--gmm", "/nonexistent.gmm", "--steps", "4", "--seed", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn alg2_is_reproducible() {
    let g = gmm("standard_normal.gmm");
    let args = ["alg2", "--gmm", g.to_str().unwrap(), "--steps", "2", "--seed", "0"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&run(&args)));
    let e = endpoint(stdout(&a).trim());
    assert_eq!(e.len(), 2);
    assert!(e.iter().all(|v| v.is_finite()));
    assert_ne!(stdout(&a), stdout(&run(&["alg2", "--gmm", g.to_str().unwrap(), "--steps", "2", "--seed", "1"])));

    let dir = tempfile::tempdir().unwrap();
    let o = run(&["alg1", "--gmm", g.to_str().unwrap(), "--steps", "4", "--seed", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("alg1.csv").exists());
}

#[test]
fn kl_check_integrals_agree() {
    let o = run(&["kl-check", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let vals: Vec<f64> = text.lines().take(2).map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(vals.len(), 2);
    assert!((vals[0] - vals[1]).abs() <= 0.01 * vals[0].abs());
    assert!(text.contains("scalar minimizer: 38/38 nodes at eps*"), "{text}");
}

#[test]
fn convergence_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(
        &cfg,
        format!(
            "gmm = {}\nsteps = 4, 8, 16, 32\nreplicates = 6\nbootstrap_samples = 200\nn_fine = 64\n",
            gmm("two_component.gmm").display()
        ),
    )
    .unwrap();
    let go = |out: &str, extra: &[&str]| {
        let out = dir.path().join(out);
        let mut args = vec!["convergence", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        out
    };
    let a = go("a", &[]);
    let b = go("b", &[]);
    for f in ["convergence.csv", "equivalent_steps.csv", "within_step.csv", "convergence.svg", "equivalent_steps.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("dynamics,schedule,scheme,steps,replicate,rmse\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 4 * 6);
    // Four cells of four step counts; the equivalent-steps plot adds the identity line.
    assert_eq!(polylines(&fs::read_to_string(a.join("convergence.svg")).unwrap()), vec![4; 4]);
    assert_eq!(polylines(&fs::read_to_string(a.join("equivalent_steps.svg")).unwrap()).len(), 3);

    // The linear-only reference makes the linear cells' 32-step rows exactly zero.
    let l = go("linear", &["--reference", "linear-only"]);
    let lin = fs::read_to_string(l.join("convergence.csv")).unwrap();
    assert!(lin.lines().filter(|r| r.contains(",linear,") && r.contains(",32,")).all(|r| r.ends_with(",0")));
    assert_ne!(lin, csv);

    let o = run(&["convergence", "--config", dir.path().join("missing.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
