mod common;

use common::*;
use ifslab_core::geometry::{pt1, Metric, Point};
use ifslab_core::hyperspace::{hausdorff, hutchinson};
use ifslab_core::measurekit::{
    bernoulli_pushforward, invariant_measure, mann_average, markov_step, monge_kantorovich, support_cloud,
    transport_solution, DiscreteMeasure,
};
use proptest::prelude::*;

fn measure(pairs: &[(f64, f64)]) -> DiscreteMeasure {
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let atoms = pairs.iter().map(|p| pt1(p.0)).collect();
    let mut w: Vec<f64> = pairs.iter().map(|p| p.1 / total).collect();
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    DiscreteMeasure::new(1, Metric::Euclidean, atoms, w, 0.0).unwrap()
}

/// On the line, `d_MK(μ, ν) = ∫ |F_μ − F_ν|`.
fn cdf_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let mut events: Vec<(f64, f64)> = mu.iter().map(|(p, w)| (p[0], w)).collect();
    events.extend(nu.iter().map(|(p, w)| (p[0], -w)));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        diff += pair[0].1;
        total += diff.abs() * (pair[1].0 - pair[0].0);
    }
    total
}

fn atoms_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 0.05f64..1.0), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn line_transport_matches_cdf_formula(a in atoms_strategy(), b in atoms_strategy()) {
        let (mu, nu) = (measure(&a), measure(&b));
        let (value, _) = monge_kantorovich(&mu, &nu).unwrap();
        prop_assert!((value - cdf_distance(&mu, &nu)).abs() <= 1e-12);
    }

    #[test]
    fn plans_have_the_right_marginals(a in atoms_strategy(), b in atoms_strategy()) {
        let (mu, nu) = (measure(&a), measure(&b));
        let sol = transport_solution(&mu, &nu).unwrap();
        for (got, want) in sol.plan.row_sums(mu.len()).iter().zip(mu.weights()) {
            prop_assert!((got - want).abs() <= 1e-12);
        }
        for (got, want) in sol.plan.col_sums(nu.len()).iter().zip(nu.weights()) {
            prop_assert!((got - want).abs() <= 1e-12);
        }
        let cost: f64 = sol
            .plan
            .entries
            .iter()
            .map(|&(i, j, f)| f * (mu.atoms()[i][0] - nu.atoms()[j][0]).abs())
            .sum();
        prop_assert!((cost - sol.value).abs() <= 1e-12);
        prop_assert!(sol.plan.entries.iter().all(|e| e.2 > 0.0));
        prop_assert!(sol.plan.entries.len() < mu.len() + nu.len());
        prop_assert!(sol.min_reduced_cost >= -1e-9);
    }

    #[test]
    fn markov_step_is_affine_and_mass_preserving(a in atoms_strategy(), b in atoms_strategy(), t in 0.0f64..1.0) {
        let ifs = cantor_weighted();
        let (mu, nu) = (measure(&a), measure(&b));
        let lhs = markov_step(&ifs, &mu.mix(t, &nu).unwrap(), 0.0).unwrap();
        let rhs = markov_step(&ifs, &mu, 0.0).unwrap().mix(t, &markov_step(&ifs, &nu, 0.0).unwrap()).unwrap();
        prop_assert!(monge_kantorovich(&lhs, &rhs).unwrap().0 <= 1e-12);
        prop_assert!((lhs.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn support_follows_the_hutchinson_operator(a in atoms_strategy()) {
        let ifs = cantor_weighted();
        let mu = measure(&a);
        let image = support_cloud(&markov_step(&ifs, &mu, 0.0).unwrap(), 0.0).unwrap();
        let direct = hutchinson(&ifs, &support_cloud(&mu, 0.0).unwrap(), 0.0).unwrap();
        prop_assert_eq!(hausdorff(&image, &direct).unwrap(), 0.0);
    }

    #[test]
    fn merging_stays_within_its_budget(a in atoms_strategy(), delta in 0.0f64..0.2) {
        let mu = measure(&a);
        let pairs: Vec<(Point, f64)> = mu.iter().map(|(p, w)| (*p, w)).collect();
        let (atoms, w): (Vec<Point>, Vec<f64>) = pairs.into_iter().unzip();
        let merged = DiscreteMeasure::new(1, Metric::Euclidean, atoms, w, delta).unwrap();
        let d = monge_kantorovich(&mu, &merged).unwrap().0;
        prop_assert!(d <= merged.merge_cost() + 1e-12);
        let p = merged.atoms();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                prop_assert!((p[i][0] - p[j][0]).abs() >= delta / 2.0);
            }
        }
    }
}

#[test]
fn dirac_distance_is_the_point_distance() {
    let d = |x: f64, y: f64, m: Metric| {
        monge_kantorovich(&DiscreteMeasure::dirac(1, m, pt1(x)), &DiscreteMeasure::dirac(1, m, pt1(y)))
            .unwrap()
            .0
    };
    assert_eq!(d(0.25, 0.75, Metric::Euclidean), 0.5);
    assert!((d(0.05, 0.95, Metric::Circle) - 0.1).abs() < 1e-15);
}

#[test]
fn weighted_cantor_measure_has_the_affine_mean() {
    // mean m solves m = Σ p_i (m/3 + b_i)
    let ifs = cantor().with_weights(vec![0.25, 0.75]).unwrap();
    let want = 0.75 * (2.0 / 3.0) / (1.0 - 1.0 / 3.0);
    let mu0 = DiscreteMeasure::dirac(1, Metric::Euclidean, pt1(0.0));
    let inv = invariant_measure(&ifs, &mu0, 1e-6, 200, 1e-5).unwrap();
    assert!((inv.measure.mean()[0] - want).abs() <= 1e-4);
    let (exact, _) = bernoulli_pushforward(&ifs, 10, 0, 0, 0.0).unwrap();
    assert!((exact.mean()[0] - want).abs() <= 1e-4);
}

#[test]
fn mann_average_of_one_step_is_the_start() {
    let ifs = circle_rotation(0.25);
    let mu0 = DiscreteMeasure::dirac(1, Metric::Circle, pt1(0.1));
    let r = mann_average(&ifs, &mu0, 1, 0.0).unwrap();
    assert_eq!(r.measure, mu0);
    // rational rotation: averages over a full period are invariant
    let r = mann_average(&ifs, &mu0, 64, 0.0).unwrap();
    assert!(r.residual <= 2.0 / 64.0);
}

#[test]
fn markov_operator_contracts_dirac_pairs_exactly() {
    let ifs = cantor_weighted();
    let (x, y) = (0.1, 0.7);
    let mx = markov_step(&ifs, &DiscreteMeasure::dirac(1, Metric::Euclidean, pt1(x)), 0.0).unwrap();
    let my = markov_step(&ifs, &DiscreteMeasure::dirac(1, Metric::Euclidean, pt1(y)), 0.0).unwrap();
    let d = monge_kantorovich(&mx, &my).unwrap().0;
    assert!((d - (y - x) / 3.0).abs() < 1e-15);
}
