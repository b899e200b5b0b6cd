use interpolant_lab::harness::*;

fn main() {
    let cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/convergence.cfg")).unwrap();
    let t = std::time::Instant::now();
    let r = run_convergence(&cfg).unwrap();
    println!("run {:?}, failures {}", t.elapsed(), r.failures.len());
    for a in &r.aggregates {
        println!("{} {} {:5} mean {:.5} median {:.5} [{:.5}, {:.5}]", a.dynamics, a.schedule, a.steps, a.mean, a.median, a.ci_low, a.ci_high);
    }
    for s in [ScheduleChoice::Linear, ScheduleChoice::Lazy] {
        for g in dynamics_gap(&r, s).unwrap() {
            println!("gap {} {:5} med sde {:.5} ode {:.5} diff {:.5} [{:.5},{:.5}]", s, g.steps, g.median_sde, g.median_ode, g.mean_difference, g.ci_low, g.ci_high);
        }
    }
    let t = std::time::Instant::now();
    for e in equivalent_steps(&r) {
        println!("eq {} {:5} {:?} [{:.2},{:.2}]", e.dynamics, e.lazy_steps, e.estimate, e.ci_low, e.ci_high);
    }
    for w in within_step_agreement(&r) {
        println!("within {} {:5} mean {:.5} median {:.5}", w.dynamics, w.steps, w.mean, w.median);
    }
    println!("post {:?}", t.elapsed());
}
