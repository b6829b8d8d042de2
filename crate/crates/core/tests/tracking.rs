use jointq::bench::{default_offset, log_grid, sweep, table_grid, ExperimentSpec};
use jointq::dist::{chi_square_quantile, normal_quantile};
use jointq::estimators::{Dumiqe, Qewa};
use jointq::joint::{empirical_quantile, is_violation, QuantileGrid, Tracker, TrackerKind, TrackerParams};
use jointq::streams::{Family, StreamConfig, Variant};
use proptest::prelude::*;

fn static_normal(seed: u64) -> StreamConfig {
    StreamConfig::normal(Variant::Static, 10.0, 100, seed)
}

fn tail_average(kind: TrackerKind, grid: QuantileGrid, lambda: f64, steps: usize, tail: usize) -> Vec<f64> {
    let mut gen = static_normal(17).generator().unwrap();
    let init = gen.take_samples(100);
    let params = TrackerParams::new(lambda).gamma(0.01).offset(0.0);
    let mut tracker = Tracker::warmup(kind, grid, params, &init).unwrap();
    let mut sums = vec![0.0; tracker.estimates().len()];
    for i in 0..steps {
        let est = tracker.step(gen.next_sample());
        if i >= steps - tail {
            for (s, e) in sums.iter_mut().zip(est) {
                *s += e;
            }
        }
    }
    sums.iter().map(|s| s / tail as f64).collect()
}

#[test]
fn single_estimators_converge_on_static_stream() {
    let mut gen = static_normal(3).generator().unwrap();
    let mut init = gen.take_samples(1000);
    init.sort_by(f64::total_cmp);
    for q in [0.1, 0.5, 0.9] {
        let truth = 10.0 + normal_quantile(q);
        let start = empirical_quantile(&init, q);
        let below: Vec<f64> = init.iter().copied().filter(|x| *x < start).collect();
        let above: Vec<f64> = init.iter().copied().filter(|x| *x > start).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mut d = Dumiqe::new(q, 0.002, start).unwrap();
        let mut e = Qewa::new(q, 0.002, 0.00002, start, mean(&below), mean(&above)).unwrap();
        let (mut sd, mut se) = (0.0, 0.0);
        for i in 0..200_000 {
            let x = gen.next_sample();
            d.update(x);
            e.update(x);
            if i >= 100_000 {
                sd += d.estimate();
                se += e.estimate();
            }
        }
        assert!((sd / 1e5 - truth).abs() < 0.05, "dumiqe q={q}: {}", sd / 1e5);
        assert!((se / 1e5 - truth).abs() < 0.05, "qewa q={q}: {}", se / 1e5);
    }
}

#[test]
fn joint_trackers_converge_on_static_stream() {
    for kind in [TrackerKind::ShiftQ, TrackerKind::CondQ, TrackerKind::Mdumiqe] {
        let grid = table_grid(3).unwrap();
        let avg = tail_average(kind, grid.clone(), 0.005, 200_000, 50_000);
        for (p, a) in grid.probs().iter().zip(&avg) {
            let truth = 10.0 + normal_quantile(*p);
            assert!((a - truth).abs() < 0.05, "{kind:?} p={p}: {a} vs {truth}");
        }
    }
}

#[test]
fn parallel_dumiqe_crosses_on_close_grid() {
    let stream = StreamConfig::normal(Variant::Periodic, 2.0, 100, 1);
    let mut gen = stream.generator().unwrap();
    let init = gen.take_samples(100);
    let grid = QuantileGrid::new(vec![0.4, 0.5, 0.6]).unwrap();
    let params = TrackerParams::new(0.05).offset(default_offset(Family::Normal));
    let mut t = Tracker::warmup(TrackerKind::ParallelDumiqe, grid, params, &init).unwrap();
    assert!((0..10_000).any(|_| is_violation(t.step(gen.next_sample()))));
}

#[test]
fn condq_is_translation_equivariant() {
    let mut gen = StreamConfig::normal(Variant::Periodic, 2.0, 100, 9).generator().unwrap();
    let xs = gen.take_samples(5_000);
    let shifted: Vec<f64> = xs.iter().map(|x| x + 250.0).collect();
    let grid = table_grid(3).unwrap();
    let params = TrackerParams::new(0.05).gamma(0.01);
    let mut a = Tracker::warmup(TrackerKind::CondQ, grid.clone(), params, &xs[..100]).unwrap();
    let mut b = Tracker::warmup(TrackerKind::CondQ, grid, params, &shifted[..100]).unwrap();
    for (x, y) in xs[100..].iter().zip(&shifted[100..]) {
        let ea = a.step(*x).to_vec();
        let eb = b.step(*y);
        for (u, v) in ea.iter().zip(eb) {
            assert!((u + 250.0 - v).abs() < 1e-6, "{u} {v}");
        }
    }
}

#[test]
fn rmse_curve_is_u_shaped() {
    let stream = StreamConfig::benchmark(Family::ChiSquare, Variant::Periodic, 100, 2);
    let mut spec = ExperimentSpec::new(stream, TrackerKind::CondQ, table_grid(3).unwrap());
    spec.steps = 50_000;
    spec.lambdas = log_grid(1e-3, 0.5, 4);
    let report = sweep(&spec).unwrap();
    let curve = report.curve();
    let best = report.optimal().rmse;
    assert!(curve.first().unwrap().1 > best * 1.2);
    assert!(curve.last().unwrap().1 > best * 1.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shiftq_and_condq_stay_ordered(
        seed in 0u64..1000,
        lambda in 0.001f64..0.5,
        gamma in 0.0001f64..0.5,
        chi in any::<bool>(),
        switch in any::<bool>(),
    ) {
        let family = if chi { Family::ChiSquare } else { Family::Normal };
        let variant = if switch { Variant::Switch } else { Variant::Periodic };
        let stream = StreamConfig::benchmark(family, variant, 100, seed);
        for kind in [TrackerKind::ShiftQ, TrackerKind::CondQ] {
            let mut gen = stream.generator().unwrap();
            let init = gen.take_samples(100);
            let params = TrackerParams::new(lambda).gamma(gamma).offset(default_offset(family));
            let mut t = Tracker::warmup(kind, table_grid(19).unwrap(), params, &init).unwrap();
            for _ in 0..5_000 {
                prop_assert!(!is_violation(t.step(gen.next_sample())));
            }
        }
    }

    #[test]
    fn chi_square_quantiles_track_truth_ordering(p in 0.01f64..0.98, dof in 1.0f64..20.0) {
        prop_assert!(chi_square_quantile(p, dof) < chi_square_quantile(p + 0.01, dof));
    }
}
