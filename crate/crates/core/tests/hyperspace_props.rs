mod common;

use common::*;
use ifslab_core::geometry::{pt1, pt2, Metric, Point};
use ifslab_core::hyperspace::{
    attractor, excess, excess_brute, excess_grid, hausdorff, hutchinson, invariance_residual, maximal_attractor,
    AttractorOptions, PointCloud,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud2(pts: &[(f64, f64)]) -> PointCloud {
    PointCloud::euclidean(2, pts.iter().map(|p| pt2(p.0, p.1)).collect()).unwrap()
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let pts: Vec<Point> = (0..n).map(|_| pt2(rng.gen(), rng.gen())).collect();
    PointCloud::euclidean(2, pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_and_brute_force_excess_agree(
        a in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..400),
        b in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..400),
    ) {
        let (a, b) = (cloud2(&a), cloud2(&b));
        prop_assert_eq!(excess_grid(&a, &b), excess_brute(&a, &b));
        prop_assert_eq!(excess_brute(&a, &b), brute_excess(a.points(), b.points(), Metric::Euclidean));
    }

    #[test]
    fn circle_grid_excess_agrees(
        a in prop::collection::vec(0.0f64..1.0, 1..300),
        b in prop::collection::vec(0.0f64..1.0, 1..300),
    ) {
        let a = PointCloud::new(1, Metric::Circle, a.into_iter().map(pt1).collect(), 0.0).unwrap();
        let b = PointCloud::new(1, Metric::Circle, b.into_iter().map(pt1).collect(), 0.0).unwrap();
        prop_assert_eq!(excess_grid(&a, &b), excess_brute(&a, &b));
    }

    #[test]
    fn hausdorff_is_a_metric(
        a in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
        b in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
        c in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..60),
    ) {
        let (a, b, c) = (cloud2(&a), cloud2(&b), cloud2(&c));
        let ab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
        prop_assert!(ab <= hausdorff(&a, &c).unwrap() + hausdorff(&c, &b).unwrap() + 1e-12);
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn pruned_clouds_are_separated_nets(
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..500),
        eps in 0.01f64..0.2,
    ) {
        let raw = cloud2(&pts);
        let net = PointCloud::new(2, Metric::Euclidean, raw.points().to_vec(), eps).unwrap();
        let p = net.points();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                prop_assert!(Metric::Euclidean.dist(&p[i], &p[j]) >= eps / 2.0);
            }
        }
        prop_assert!(excess(&raw, &net).unwrap() < eps / 2.0 + 1e-15);
    }

    #[test]
    fn hutchinson_is_order_monotone(
        b in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..200),
        keep in 1usize..200,
    ) {
        let eps = 0.01;
        let ifs = sierpinski();
        let big = cloud2(&b);
        let sub: Vec<Point> = big.points().iter().take(keep.min(big.len())).copied().collect();
        let small = PointCloud::euclidean(2, sub).unwrap();
        let fa = hutchinson(&ifs, &small, eps).unwrap();
        let fb = hutchinson(&ifs, &big, eps).unwrap();
        prop_assert!(excess(&fa, &fb).unwrap() <= eps);
    }
}

#[test]
fn contraction_transfers_to_the_hyperspace() {
    let ifs = sierpinski();
    let eps = 0.002;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let a = random_cloud(&mut rng, 50);
        let b = random_cloud(&mut rng, 50);
        let before = hausdorff(&a, &b).unwrap();
        let after = hausdorff(&hutchinson(&ifs, &a, eps).unwrap(), &hutchinson(&ifs, &b, eps).unwrap()).unwrap();
        assert!(after <= 0.5 * before + 2.0 * eps, "{after} vs {before}");
    }
}

#[test]
fn attractor_forgets_its_seed() {
    let ifs = sierpinski();
    let eps = 0.001;
    let opts = AttractorOptions::new(4.0 * eps, 60).with_prune_eps(eps);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut outs = Vec::new();
    for _ in 0..5 {
        let seed = random_cloud(&mut rng, 3);
        let (cloud, trace) = attractor(&ifs, &seed, &opts).unwrap();
        assert!(trace.converged);
        outs.push(cloud);
    }
    for o in &outs[1..] {
        assert!(hausdorff(&outs[0], o).unwrap() <= 4.0 * eps);
    }
}

#[test]
fn cantor_step_ratios_near_one_third() {
    let seed = PointCloud::euclidean(1, vec![pt1(0.0), pt1(1.0)]).unwrap();
    let (cloud, trace) = attractor(&cantor(), &seed, &AttractorOptions::new(1e-6, 40).with_prune_eps(0.0)).unwrap();
    assert!(trace.converged);
    for r in &trace.step_ratios()[1..] {
        assert!((0.28..=0.39).contains(r), "{r}");
    }
    assert!(invariance_residual(&cantor(), &cloud, 0.0).unwrap() <= 1e-6);
}

#[test]
fn sierpinski_attractor_matches_enumeration() {
    let eps = 0.004;
    let seed = PointCloud::euclidean(2, vec![pt2(0.3, 0.3)]).unwrap();
    let (cloud, trace) = attractor(&sierpinski(), &seed, &AttractorOptions::new(1e-3, 60).with_prune_eps(eps)).unwrap();
    assert!(trace.converged);
    let reference = sierpinski_reference(10);
    assert!(hausdorff(&cloud, &reference).unwrap() <= 2.0 * eps);
}

#[test]
fn maximal_attractor_of_cantor_tracks_interval_oracle() {
    let spacing = 1e-3;
    let grid = PointCloud::grid_1d(0.0, 1.0, 1001);
    for n in [2usize, 4, 6] {
        let (cloud, report) = maximal_attractor(&cantor(), &grid, n, spacing).unwrap();
        assert!(report.monotone);
        // F^n([0,1]) is 2^n intervals of length 3^-n; their endpoints form the oracle
        let mut ends = Vec::new();
        for bits in 0..(1usize << n) {
            let mut left = 0.0;
            let mut scale = 1.0;
            for i in 0..n {
                scale /= 3.0;
                if bits >> (n - 1 - i) & 1 == 1 {
                    left += 2.0 * scale;
                }
            }
            ends.push(pt1(left));
            ends.push(pt1(left + scale));
        }
        let oracle = PointCloud::euclidean(1, ends).unwrap();
        let d = hausdorff(&cloud, &oracle).unwrap();
        assert!(d <= 3f64.powi(-(n as i32)) + spacing, "n={n}: {d}");
    }
}
