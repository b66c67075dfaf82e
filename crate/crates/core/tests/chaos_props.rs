mod common;

use common::*;
use ifslab_core::chaosgame::{
    chaos_vs_attractor, omega_limit, run_orbit, stochastic_driver_run, ChaosError, OrbitConfig, StochasticOptions,
};
use ifslab_core::codespace::{Driver, DriverKind, Word};
use ifslab_core::geometry::{pt1, pt2, Bounds, Metric};
use ifslab_core::hyperspace::{hausdorff, PointCloud};
use ifslab_core::mapkit::{IFSystem, MapSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cantor_orbits_couple_at_rate_one_third(x in 0.0f64..1.0, y in 0.0f64..1.0, seed in 0u64..1000) {
        let driver = |s| Driver::new(DriverKind::Bernoulli { weights: vec![0.5, 0.5], seed: s }, 2).unwrap();
        let a = run_orbit(&cantor(), &OrbitConfig::new(pt1(x), driver(seed), 40).with_burn_in(0)).unwrap();
        let b = run_orbit(&cantor(), &OrbitConfig::new(pt1(y), driver(seed), 40).with_burn_in(0)).unwrap();
        prop_assert_eq!(&a.symbols, &b.symbols);
        for k in 0..=40 {
            let d = (a.points[k][0] - b.points[k][0]).abs();
            prop_assert!(d <= 3f64.powi(-(k as i32)) * (x - y).abs() + 1e-15);
        }
    }

    #[test]
    fn stride_keeps_first_multiples_and_last(n in 2usize..500, stride in 1usize..40) {
        let cfg = OrbitConfig::new(pt1(0.5), Driver::champernowne(2), n).with_burn_in(0).with_stride(stride);
        let orbit = run_orbit(&cantor(), &cfg).unwrap();
        let mut want: Vec<usize> = (0..=n).step_by(stride).collect();
        if *want.last().unwrap() != n {
            want.push(n);
        }
        prop_assert_eq!(&orbit.indices, &want);
        prop_assert_eq!(orbit.points.len(), want.len());
    }
}

#[test]
fn orbits_are_deterministic() {
    let cfg = || {
        OrbitConfig::new(
            pt2(0.1, 0.2),
            Driver::new(DriverKind::Bernoulli { weights: vec![0.2, 0.3, 0.5], seed: 4 }, 3).unwrap(),
            5000,
        )
    };
    let a = run_orbit(&sierpinski(), &cfg()).unwrap();
    let b = run_orbit(&sierpinski(), &cfg()).unwrap();
    assert_eq!(a.points, b.points);
    assert_eq!(a.symbols, b.symbols);
}

#[test]
fn cantor_champernowne_orbit_recovers_the_attractor() {
    let cfg = OrbitConfig::new(pt1(0.5), Driver::champernowne(2), 100_000).with_burn_in(1000);
    let report = chaos_vs_attractor(&cantor(), &cfg, &cantor_reference(10), 0.01, 0.001).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.hausdorff.unwrap() <= 0.01);
    assert!(!report.sensitivity.is_empty());
}

#[test]
fn omega_estimate_forgets_the_start() {
    let reference = sierpinski_reference(8);
    let mut clouds = Vec::new();
    for x0 in [pt2(0.0, 0.0), pt2(1.0, 1.0), pt2(0.9, 0.1)] {
        let orbit = run_orbit(&sierpinski(), &OrbitConfig::new(x0, Driver::champernowne(3), 60_000)).unwrap();
        let om = omega_limit(&orbit, 2000, 0.005).unwrap();
        assert!(hausdorff(&om.cloud, &reference).unwrap() <= 0.03);
        clouds.push(om.cloud);
    }
    for c in &clouds[1..] {
        assert!(hausdorff(&clouds[0], c).unwrap() <= 0.03);
    }
}

#[test]
fn later_burn_in_never_grows_the_tail() {
    let orbit = run_orbit(&cantor(), &OrbitConfig::new(pt1(0.5), Driver::champernowne(2), 20_000)).unwrap();
    let mut prev = usize::MAX;
    for m in [1000, 5000, 10_000, 19_000] {
        let om = omega_limit(&orbit, m, 0.0).unwrap();
        assert!(om.stats.tail_len <= prev);
        prev = om.stats.tail_len;
    }
    assert!(matches!(omega_limit(&orbit, 20_000, 0.0), Err(ChaosError::EmptyTail { .. })));
}

#[test]
fn semiattractor_tail_keeps_returning_to_one() {
    let orbit = run_orbit(&semiattractor(), &OrbitConfig::new(pt1(1.0), Driver::champernowne(2), 20_000)).unwrap();
    // the exponent walk returns to 0 at the end of each Champernowne block
    for end in [3586usize, 8194, 18434] {
        assert_eq!(orbit.points[end][0], 1.0, "index {end}");
    }
}

#[test]
fn expanding_systems_escape() {
    let ifs = IFSystem::new(vec![MapSpec::scalar(2.0, 0.0), MapSpec::scalar(3.0, 0.0)], Bounds::interval(-1.0, 1.0))
        .unwrap();
    let cfg = OrbitConfig::new(pt1(0.9), Driver::champernowne(2), 1000);
    assert!(matches!(run_orbit(&ifs, &cfg), Err(ChaosError::Escape { .. })));
    let report = chaos_vs_attractor(&ifs, &cfg, &PointCloud::euclidean(1, vec![pt1(0.0)]).unwrap(), 0.1, 0.0).unwrap();
    assert!(!report.passed);
    assert!(report.reason.unwrap().starts_with("orbit unbounded"));
}

#[test]
fn bernoulli_trials_pass_and_periodic_driver_fails() {
    let reference = sierpinski_reference(8);
    let bern = Driver::new(DriverKind::Bernoulli { weights: vec![1.0 / 3.0; 3], seed: 0 }, 3).unwrap();
    let opts = StochasticOptions {
        n: 50_000,
        trials: 4,
        seed: 17,
        k: 4,
        tol: 0.03,
        prune_eps: 0.005,
        burn_in: None,
    };
    let report = stochastic_driver_run(&sierpinski(), pt2(0.3, 0.3), &bern, &reference, &opts).unwrap();
    assert_eq!(report.trials.len(), 4);
    assert_eq!(report.disjunctive_count, 4);
    assert_eq!(report.passed_count, 4);
    let again = stochastic_driver_run(&sierpinski(), pt2(0.3, 0.3), &bern, &reference, &opts).unwrap();
    assert_eq!(report.pooled_hausdorff, again.pooled_hausdorff);

    let periodic = Driver::periodic(Word::new(vec![1, 2], 3).unwrap()).unwrap();
    let cfg = OrbitConfig::new(pt2(0.3, 0.3), periodic, 20_000);
    let report = chaos_vs_attractor(&sierpinski(), &cfg, &reference, 0.03, 0.005).unwrap();
    assert!(!report.passed);
    assert_eq!(*report.omega.as_ref().unwrap().metric(), Metric::Euclidean);
}
