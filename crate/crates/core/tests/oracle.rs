use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use interpolant_lab::field::FieldKind;
use interpolant_lab::gmm_oracle::{
    exact_gaussian_path, marginal_params, oracle_eval, Component, GaussianMixture, GmmOracle, LogDensity,
};
use interpolant_lab::schedule::{make_lazy_ode, make_lazy_sde, make_linear, DiffusionScale, Schedule, ScheduleKind};
use interpolant_lab::solvers::WienerPath;
use interpolant_lab::Error;

fn schedules() -> Vec<Schedule> {
    vec![
        make_linear(),
        make_lazy_ode(),
        make_lazy_sde(),
        Schedule::custom("trig", ScheduleKind::DensityAdmitting, |t| (0.5 * std::f64::consts::PI * t).cos(), |t| (0.5 * std::f64::consts::PI * t).sin(),
            |t| -0.5 * std::f64::consts::PI * (0.5 * std::f64::consts::PI * t).sin(), |t| 0.5 * std::f64::consts::PI * (0.5 * std::f64::consts::PI * t).cos()),
    ]
}

fn normals(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

fn finite(ld: LogDensity) -> f64 {
    match ld {
        LogDensity::Finite(v) => v,
        LogDensity::PointMass => panic!("unexpected point mass"),
    }
}

#[test]
fn standard_gaussian_score_is_linear() {
    let g = GaussianMixture::standard_normal(3);
    for s in schedules() {
        for i in 1..20 {
            let t = i as f64 / 20.0;
            let x = [0.3, -1.2, 2.0];
            let e = oracle_eval(&g, &s, t, &x).unwrap();
            let v = s.alpha(t).powi(2) + s.beta(t).powi(2);
            for k in 0..3 {
                assert!((e.score[k] + x[k] / v).abs() <= 1e-12 * (1.0 + x[k].abs() / v));
            }
        }
    }
}

#[test]
fn data_predictor_at_one_is_identity() {
    let g = GaussianMixture::random(2, 3, 11);
    let e = oracle_eval(&g, &make_linear(), 1.0, &[0.7, -0.4]).unwrap();
    assert_abs_diff_eq!(e.eta_x[0], 0.7, epsilon = 1e-12);
    assert_abs_diff_eq!(e.eta_x[1], -0.4, epsilon = 1e-12);
}

#[test]
fn symmetric_mixture_score_vanishes_at_origin() {
    let g = GaussianMixture::new(vec![
        Component::diagonal(0.5, vec![-2.0], &[1.0]).unwrap(),
        Component::diagonal(0.5, vec![2.0], &[1.0]).unwrap(),
    ])
    .unwrap();
    let o = GmmOracle::new(g, make_linear());
    let e = o.eval(0.5, &[0.0]).unwrap();
    assert_abs_diff_eq!(e.score[0], 0.0, epsilon = 1e-15);
    let h = 1e-5;
    let fd = (finite(o.log_density(0.5, &[h]).unwrap()) - finite(o.log_density(0.5, &[-h]).unwrap())) / (2.0 * h);
    assert!(fd.abs() < 1e-6);
}

#[test]
fn score_matches_finite_differences_and_predictor_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scheds = schedules();
    for case in 0..50 {
        let d = 1 + case % 3;
        let g = GaussianMixture::random(d, 1 + case % 4, 100 + case as u64);
        let s = &scheds[case % scheds.len()];
        let t: f64 = rng.random_range(0.05..0.95);
        let x: Vec<f64> = normals(&mut rng, d).into_iter().map(|v| 1.5 * v).collect();
        let o = GmmOracle::new(g, s.clone());
        let e = o.eval(t, &x).unwrap();
        let h = 1e-5;
        for i in 0..d {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            let fd = (finite(o.log_density(t, &xp).unwrap()) - finite(o.log_density(t, &xm).unwrap())) / (2.0 * h);
            assert!((e.score[i] - fd).abs() <= 1e-5, "case {case}: {} vs {fd}", e.score[i]);
            let (a, b) = (s.alpha(t), s.beta(t));
            assert!((a * e.eta_z[i] + b * e.eta_x[i] - x[i]).abs() <= 1e-10);
            assert!((e.score[i] + e.eta_z[i] / a).abs() <= 1e-10 * (1.0 + e.score[i].abs()));
        }
    }
}

/// E[X | I_t = x] by self-normalized importance sampling over data draws.
#[test]
fn data_predictor_matches_importance_sampling() {
    let g = GaussianMixture::random(2, 3, 3);
    let s = make_linear();
    let data = g.sample(200_000, 9);
    for (t, x) in [(0.6, [0.5, -0.3]), (0.8, [-1.0, 1.0]), (0.4, [0.2, 0.2])] {
        let (a, b) = (s.alpha(t), s.beta(t));
        let (mut num, mut den) = ([0.0; 2], 0.0);
        for xs in &data {
            let r2: f64 = (0..2).map(|i| (x[i] - b * xs[i]).powi(2)).sum();
            let w = (-0.5 * r2 / (a * a)).exp();
            den += w;
            for i in 0..2 {
                num[i] += w * xs[i];
            }
        }
        let e = oracle_eval(&g, &s, t, &x).unwrap();
        for i in 0..2 {
            assert!((num[i] / den - e.eta_x[i]).abs() < 0.02, "t={t}: {} vs {}", num[i] / den, e.eta_x[i]);
        }
    }
}

#[test]
fn drift_assembly_routes_agree() {
    let g = GaussianMixture::random(2, 2, 21);
    for s in schedules() {
        let o = GmmOracle::new(g.clone(), s.clone());
        for eps in [DiffusionScale::Zero, DiffusionScale::Optimal, DiffusionScale::Constant(0.7)] {
            let f = o.drift(eps.clone());
            let bf = o.field(FieldKind::BackwardDrift(eps.clone()));
            for i in 1..10 {
                let t = i as f64 / 10.0;
                let x = [0.4 - t, 1.1 * t];
                let e = o.eval(t, &x).unwrap();
                let ep = eps.at(&s, t);
                let b = f.eval(t, &x).unwrap();
                let bb = bf.eval(t, &x).unwrap();
                for k in 0..2 {
                    let base = s.alpha_dot(t) * e.eta_z[k] + s.beta_dot(t) * e.eta_x[k];
                    assert!((b[k] - (base + ep * e.score[k])).abs() < 1e-10);
                    assert!((bb[k] - (base - ep * e.score[k])).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn backward_optimal_drift_is_linear() {
    for seed in 0..3 {
        let g = GaussianMixture::random(2, 3, seed);
        for s in schedules() {
            let f = GmmOracle::new(g.clone(), s.clone()).field(FieldKind::BackwardDrift(DiffusionScale::Optimal));
            for i in 1..20 {
                let t = i as f64 / 20.0;
                let x = [1.3, -0.6];
                let b = f.eval(t, &x).unwrap();
                let k = s.beta_dot(t) / s.beta(t);
                for j in 0..2 {
                    assert!((b[j] - k * x[j]).abs() < 1e-9, "{} t={t}", s.name());
                }
            }
        }
    }
}

#[test]
fn backward_drift_rejects_t_zero() {
    let f = GmmOracle::new(GaussianMixture::standard_normal(1), make_lazy_ode()).field(FieldKind::BackwardDrift(DiffusionScale::Optimal));
    assert!(matches!(f.eval(0.0, &[0.0]), Err(Error::SingularTime { .. })));
    let b1 = f.eval(1.0, &[0.5]).unwrap();
    assert!((b1[0] - make_lazy_ode().eps_star(1.0) * 0.5).abs() < 1e-12);
}

#[test]
fn point_mass_density_marker() {
    let o = GmmOracle::new(GaussianMixture::standard_normal(2), make_lazy_sde());
    assert_eq!(o.log_density(0.0, &[0.0, 0.0]).unwrap(), LogDensity::PointMass);
    assert!(matches!(o.eval(0.0, &[0.0, 0.0]), Err(Error::SingularTime { .. })));
}

#[test]
fn marginal_params_boundaries() {
    let g = GaussianMixture::random(2, 2, 4);
    for c in marginal_params(&g, &make_linear(), 0.0) {
        assert_eq!(c.mean, vec![0.0, 0.0]);
        assert_eq!(c.cov, DMatrix::identity(2, 2));
    }
    for (c, k) in marginal_params(&g, &make_linear(), 1.0).iter().zip(g.components()) {
        assert_eq!(c.mean, k.mean());
        assert_eq!(&c.cov, k.cov());
    }
}

#[test]
fn marginal_params_one_dimensional_monte_carlo() {
    let g = GaussianMixture::new(vec![Component::diagonal(1.0, vec![2.0], &[1.0]).unwrap()]).unwrap();
    let p = &marginal_params(&g, &make_linear(), 0.5)[0];
    assert_eq!(p.mean[0], 1.0);
    assert_eq!(p.cov[(0, 0)], 0.5);
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        let x = g.sample_one(&mut rng)[0];
        let v = 0.5 * z + 0.5 * x;
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / n as f64;
    let var = s2 / n as f64 - mean * mean;
    assert!((mean - 1.0).abs() < 3.0 * (0.5f64 / n as f64).sqrt());
    // Var of the sample variance of a Gaussian is 2σ⁴/n.
    assert!((var - 0.5).abs() < 3.0 * (2.0 * 0.25 / n as f64).sqrt());
}

/// Mixture mean and covariance of law(I_t) from marginal_params.
fn mixture_moments(gmm: &GaussianMixture, s: &Schedule, t: f64) -> (Vec<f64>, DMatrix<f64>) {
    let d = gmm.dim();
    let comps = marginal_params(gmm, s, t);
    let mut mean = vec![0.0; d];
    for c in &comps {
        for i in 0..d {
            mean[i] += c.weight * c.mean[i];
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for c in &comps {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += c.weight * (c.cov[(i, j)] + (c.mean[i] - mean[i]) * (c.mean[j] - mean[j]));
            }
        }
    }
    (mean, cov)
}

#[test]
fn marginal_moments_match_monte_carlo() {
    let scheds = schedules();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 200_000;
    for case in 0..10 {
        let g = GaussianMixture::random(2, 1 + case % 3, 500 + case as u64);
        let s = &scheds[case % scheds.len()];
        let t: f64 = rng.random_range(0.05..0.95);
        let (a, b) = (s.alpha(t), s.beta(t));
        let mut draws = Vec::with_capacity(n);
        for _ in 0..n {
            let x = g.sample_one(&mut rng);
            let z = normals(&mut rng, 2);
            draws.push([a * z[0] + b * x[0], a * z[1] + b * x[1]]);
        }
        let (mu, cov) = mixture_moments(&g, s, t);
        for i in 0..2 {
            let m: f64 = draws.iter().map(|v| v[i]).sum::<f64>() / n as f64;
            assert!((m - mu[i]).abs() < 4.0 * (cov[(i, i)] / n as f64).sqrt(), "case {case}");
            for j in 0..2 {
                let prod: Vec<f64> = draws.iter().map(|v| (v[i] - mu[i]) * (v[j] - mu[j])).collect();
                let c = prod.iter().sum::<f64>() / n as f64;
                let sd = (prod.iter().map(|p| (p - c).powi(2)).sum::<f64>() / n as f64).sqrt() / (n as f64).sqrt();
                assert!((c - cov[(i, j)]).abs() < 4.0 * sd, "case {case} ({i},{j}): {c} vs {}", cov[(i, j)]);
            }
        }
    }
}

#[test]
fn sampling_properties() {
    let c = Component::new(1.0, vec![1.0, -2.0], DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
    let g = GaussianMixture::new(vec![c]).unwrap();
    let n = 100_000;
    let xs = g.sample(n, 3);
    let bound = 4.0 * (3.0 / n as f64).sqrt();
    for (i, m) in [1.0, -2.0].iter().enumerate() {
        let mean = xs.iter().map(|x| x[i]).sum::<f64>() / n as f64;
        assert!((mean - m).abs() < bound);
    }
    assert_eq!(g.sample(1, 8), g.sample(1, 8));
    let two = GaussianMixture::new(vec![
        Component::diagonal(1.0, vec![5.0], &[0.01]).unwrap(),
        Component::diagonal(0.0, vec![-5.0], &[0.01]).unwrap(),
    ])
    .unwrap();
    assert!(two.sample(1000, 1).iter().all(|x| x[0] > 4.0));
}

#[test]
fn mixture_file_errors_carry_lines() {
    let bad = "2 1\nw=1\nm=0 0\nC=full 1 2 2 1\n";
    match GaussianMixture::parse(bad) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected parse error, got {other:?}"),
    }
    let bundled = GaussianMixture::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_component.gmm")).unwrap();
    assert_eq!((bundled.dim(), bundled.components().len()), (2, 2));
}

#[test]
fn exact_path_examples() {
    // Lazy ODE: flat.
    let w = WienerPath::sample(2, 4096, 3);
    let p = exact_gaussian_path(&make_lazy_ode(), &DiffusionScale::Zero, &[0.5, -1.0], &w).unwrap();
    assert!(p.states().all(|x| (x[0] - 0.5).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12));

    // Linear ODE: X₁ = z exactly, so the endpoint law is N(0, I).
    let p = exact_gaussian_path(&make_linear(), &DiffusionScale::Zero, &[1.7], &WienerPath::sample(1, 4096, 1)).unwrap();
    assert!((p.endpoint()[0] - 1.7).abs() < 1e-10);

    // Lazy SDE with ε*: covariance β_t at t = 1/2 and t = 1, z irrelevant.
    let n = 10_000;
    let (mut v_half, mut v_one) = (0.0, 0.0);
    for seed in 0..n {
        let w = WienerPath::sample(1, 256, seed);
        let p = exact_gaussian_path(&make_lazy_sde(), &DiffusionScale::Optimal, &[9.0], &w).unwrap();
        v_half += p.state(128)[0].powi(2);
        v_one += p.endpoint()[0].powi(2);
    }
    let (v_half, v_one) = (v_half / n as f64, v_one / n as f64);
    let beta_half = make_lazy_sde().beta(0.5);
    assert!((v_half - beta_half).abs() < 3.0 * beta_half * (2.0 / n as f64).sqrt(), "{v_half}");
    assert!((v_one - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{v_one}");
}
