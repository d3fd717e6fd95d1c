use silab::dynamics::{run, RunConfig};
use silab::model::{NoiseSpec, TeacherSpec};
use silab::oracles::{OracleKind, OracleSpec};
use silab::rng::SeedTree;
use silab::MonomialPoly;

fn config(kind: OracleKind, link: &str, d: usize, eta: f64, gamma: f64, n: usize, batch: usize) -> RunConfig {
    let p = MonomialPoly::parse(link).unwrap();
    let teacher = TeacherSpec::canonical(d, p.clone(), NoiseSpec::NONE).unwrap();
    RunConfig::new(teacher, OracleSpec::new(kind, p, eta, gamma), n, batch, SeedTree::new(21))
}

#[test]
fn every_sample_is_used_once() {
    for kind in [OracleKind::Online, OracleKind::BatchReuse, OracleKind::Alternating] {
        for (n, batch) in [(1000, 1), (1000, 7), (129, 128)] {
            let t = run(&config(kind, "He3", 10, 0.01, 0.01, n, batch)).unwrap();
            assert_eq!(t.steps, n / batch);
            assert_eq!(t.samples_seen, batch * t.steps);
            assert_eq!(t.checkpoints.last().unwrap().samples_seen, t.samples_seen);
        }
    }
}

#[test]
fn identical_configs_give_identical_trajectories() {
    let cfg = config(OracleKind::Alternating, "He3", 20, 0.05, 0.01, 20_000, 16);
    let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
    assert_eq!(a.checkpoints, b.checkpoints);
    assert_eq!(a.final_network, b.final_network);
}

#[test]
fn higher_threshold_is_reached_later() {
    let mut cfg = config(OracleKind::Online, "He2", 25, 0.0, 0.04, 4000, 1);
    cfg.record_every = 1;
    let t = run(&cfg).unwrap();
    let (lo, hi) = (t.first_crossing(0.5), t.first_crossing(0.7));
    if let Some(h) = hi {
        assert!(lo.unwrap() <= h);
    }
    assert_eq!(t.weak_recovery_step, lo);
}

#[test]
fn linear_link_recovers_in_order_d_samples() {
    // the information-exponent-one case; median over 10 seeds must be finite
    let d = 25;
    let mut steps: Vec<usize> = (0..10u64)
        .map(|r| {
            let mut cfg = config(OracleKind::Online, "He1", d, 0.0, 1.0 / d as f64, 10_000, 1);
            cfg.seed = SeedTree::new(5).child(r);
            cfg.record_every = 1;
            run(&cfg).unwrap().weak_recovery_step.unwrap_or(usize::MAX)
        })
        .collect();
    steps.sort_unstable();
    assert!(steps[5] < 10_000, "{steps:?}");
}
