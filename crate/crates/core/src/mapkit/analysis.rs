//! Sampled contraction analysis. Every sampled quantity here is a lower
//! bound on the true supremum it estimates.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ComparisonFunction, IFSystem, MapKitError, PointMap};
use crate::geometry::{random_direction, Bounds, Metric, Point};

pub const DEFAULT_ENVELOPE_BINS: usize = 32;
pub const DEFAULT_P_MAX: usize = 4;
const EVENTUAL_WORD_BUDGET: u64 = 10_000;
/// Sampled Lipschitz sums within this distance of 1 are not declared contractive.
const AVERAGE_MARGIN: f64 = 1e-6;

fn perturbed(region: &Bounds, metric: &Metric, x: &Point, dir: &Point, t: f64) -> Option<Point> {
    match metric {
        Metric::Circle => Some(metric.normalize([x[0] + t * dir[0].signum(), 0.0, 0.0])),
        Metric::Euclidean => {
            for sign in [1.0, -1.0] {
                let mut y = *x;
                for i in 0..region.dim {
                    y[i] += sign * t * dir[i];
                }
                if region.contains(&y) {
                    return Some(y);
                }
            }
            None
        }
    }
}

/// Max of `d(w x, w y)/d(x, y)` over sampled pairs: uniform pairs,
/// perturbation pairs at relative scales 1e-1..1e-6, and perturbation pairs
/// anchored at the box vertices.
pub fn sampled_lipschitz<M: PointMap + ?Sized>(
    map: &M,
    region: &Bounds,
    metric: &Metric,
    samples: usize,
    seed: u64,
) -> Result<f64, MapKitError> {
    if samples < 2 {
        return Err(MapKitError::InvalidArgument("samples must be ≥ 2".into()));
    }
    if !region.has_volume() {
        return Err(MapKitError::DegenerateRegion);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diam = region.diameter(metric);
    let vertices = region.vertices();
    let mut best: f64 = 0.0;
    let mut ratio = |x: &Point, y: &Point| -> Result<(), MapKitError> {
        let d = metric.dist(x, y);
        if d > 0.0 {
            let dw = metric.dist(&metric.normalize(map.apply(x)?), &metric.normalize(map.apply(y)?));
            best = best.max(dw / d);
        }
        Ok(())
    };
    for s in 0..samples {
        let x = region.sample(&mut rng);
        if s % 2 == 0 {
            let y = region.sample(&mut rng);
            ratio(&x, &y)?;
        } else {
            let t = diam * 10f64.powi(-(1 + ((s / 2) % 6) as i32));
            let dir = random_direction(region.dim, &mut rng);
            if let Some(y) = perturbed(region, metric, &x, &dir, t) {
                ratio(&x, &y)?;
            }
        }
    }
    for v in &vertices {
        for e in 1..=6 {
            let t = diam * 10f64.powi(-e);
            let inward: Point = std::array::from_fn(|i| {
                if i < region.dim {
                    if v[i] > region.center()[i] {
                        -1.0
                    } else {
                        1.0
                    }
                } else {
                    0.0
                }
            });
            let n = (region.dim as f64).sqrt();
            let dir: Point = std::array::from_fn(|i| inward[i] / n);
            if let Some(y) = perturbed(region, metric, v, &dir, t) {
                ratio(v, &y)?;
            }
            for i in 0..region.dim {
                let mut axis = [0.0; 3];
                axis[i] = inward[i];
                if let Some(y) = perturbed(region, metric, v, &axis, t) {
                    ratio(v, &y)?;
                }
            }
        }
    }
    Ok(best)
}

/// Exact operator norm for affine maps (and exact constants for the builtin
/// isometries); sampled estimate otherwise.
pub fn estimate_lipschitz<M: PointMap + ?Sized>(
    map: &M,
    region: &Bounds,
    metric: &Metric,
    samples: usize,
    seed: u64,
) -> Result<f64, MapKitError> {
    match map.exact_lipschitz(metric) {
        Some(l) => Ok(l),
        None => sampled_lipschitz(map, region, metric, samples, seed),
    }
}

/// Sampled upper envelope of `d(w x, w y)/d(x, y)` as a function of the
/// distance, on logarithmic bins over `(1e-6·diam, diam]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RakotchEnvelope {
    /// `bins + 1` increasing bin edges.
    pub edges: Vec<f64>,
    /// Raw per-bin maxima (0 where no pair landed).
    pub raw: Vec<f64>,
    /// Nonincreasing envelope after the suffix-max pass.
    pub lambda: Vec<f64>,
    pub covered: Vec<bool>,
}

impl RakotchEnvelope {
    /// `λ(t) < 1` on every covered bin.
    pub fn verdict(&self) -> bool {
        self.lambda_below(1.0)
    }

    /// `λ(t) < c` on every covered bin.
    pub fn lambda_below(&self, c: f64) -> bool {
        self.covered
            .iter()
            .zip(&self.lambda)
            .all(|(cov, l)| !cov || *l < c)
    }

    pub fn coverage(&self) -> f64 {
        self.covered.iter().filter(|c| **c).count() as f64 / self.covered.len() as f64
    }

    /// Rakotch table with knots at the lower bin edges.
    pub fn to_comparison(&self) -> Result<ComparisonFunction, MapKitError> {
        let table = self
            .edges
            .iter()
            .zip(&self.lambda)
            .map(|(t, l)| (*t, *l))
            .collect();
        ComparisonFunction::rakotch(table)
    }
}

pub fn rakotch_envelope<M: PointMap + ?Sized>(
    map: &M,
    region: &Bounds,
    metric: &Metric,
    bins: usize,
    samples: usize,
    seed: u64,
) -> Result<RakotchEnvelope, MapKitError> {
    if bins == 0 {
        return Err(MapKitError::InvalidArgument("bins must be ≥ 1".into()));
    }
    if !region.has_volume() {
        return Err(MapKitError::DegenerateRegion);
    }
    let diam = region.diameter(metric);
    let lo = 1e-6 * diam;
    let ratio_step = (diam / lo).powf(1.0 / bins as f64);
    let mut edges: Vec<f64> = (0..=bins).map(|k| lo * ratio_step.powi(k as i32)).collect();
    edges[bins] = diam;
    let mut raw = vec![0.0_f64; bins];
    let mut covered = vec![false; bins];
    let vertices = region.vertices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_bin = (samples / bins).max(1);

    for b in 0..bins {
        for s in 0..per_bin {
            let x = if s % 4 == 0 {
                vertices[rng.gen_range(0..vertices.len())]
            } else {
                region.sample(&mut rng)
            };
            let t = (edges[b].ln() + rng.gen::<f64>() * (edges[b + 1].ln() - edges[b].ln())).exp();
            let dir = if s % 4 == 0 && region.dim > 1 && s % 8 == 0 {
                let mut axis = [0.0; 3];
                axis[rng.gen_range(0..region.dim)] = 1.0;
                axis
            } else {
                random_direction(region.dim, &mut rng)
            };
            let Some(y) = perturbed(region, metric, &x, &dir, t) else {
                continue;
            };
            let d = metric.dist(&x, &y);
            if d <= 0.0 {
                continue;
            }
            let k = edges.partition_point(|e| *e < d).clamp(1, bins) - 1;
            let dw = metric.dist(&metric.normalize(map.apply(&x)?), &metric.normalize(map.apply(&y)?));
            raw[k] = raw[k].max(dw / d);
            covered[k] = true;
        }
    }
    let mut lambda = raw.clone();
    for k in (0..bins.saturating_sub(1)).rev() {
        lambda[k] = lambda[k].max(lambda[k + 1]);
    }
    Ok(RakotchEnvelope {
        edges,
        raw,
        lambda,
        covered,
    })
}

/// `p_j·(c_j − c_b) < (1 − c_b) − Σ_k coef_k·p_k` together with
/// `p_j ∈ (0, 1 − Σ_k p_k)`, where `b` is the index of the smallest
/// Lipschitz constant and the `k` range over the earlier free weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightInequality {
    pub index: usize,
    pub coefficient: f64,
    pub constant: f64,
    /// `(k, c_k − c_b)` for previously constrained weights.
    pub earlier: Vec<(usize, f64)>,
}

impl WeightInequality {
    /// Upper bound on `p_index` when no earlier weights enter.
    pub fn bound(&self) -> Option<f64> {
        (self.earlier.is_empty() && self.coefficient > 0.0).then(|| self.constant / self.coefficient)
    }
}

impl fmt::Display for WeightInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}*({}) < {}", self.index + 1, self.coefficient, self.constant)?;
        for (k, c) in &self.earlier {
            write!(f, " - p{}*({c})", k + 1)?;
        }
        Ok(())
    }
}

/// Set of weight vectors making `Σ p_i Lip(w_i) < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageRegion {
    pub base: usize,
    pub lipschitz: Vec<f64>,
    pub nonempty: bool,
    pub inequalities: Vec<WeightInequality>,
}

impl AverageRegion {
    pub fn from_lipschitz(lipschitz: &[f64]) -> Self {
        let base = lipschitz
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let cb = lipschitz[base];
        let mut earlier: Vec<(usize, f64)> = Vec::new();
        let mut inequalities = Vec::new();
        for (j, &cj) in lipschitz.iter().enumerate() {
            if j == base {
                continue;
            }
            inequalities.push(WeightInequality {
                index: j,
                coefficient: cj - cb,
                constant: 1.0 - cb,
                earlier: earlier.clone(),
            });
            earlier.push((j, cj - cb));
        }
        Self {
            base,
            lipschitz: lipschitz.to_vec(),
            nonempty: cb < 1.0,
            inequalities,
        }
    }

    /// Membership of a full weight vector.
    pub fn contains(&self, weights: &[f64]) -> bool {
        if weights.len() != self.lipschitz.len() || weights.iter().any(|p| *p <= 0.0) {
            return false;
        }
        let mut used = 0.0;
        for ineq in &self.inequalities {
            let p = weights[ineq.index];
            let rhs = ineq.constant - ineq.earlier.iter().map(|(k, c)| weights[*k] * c).sum::<f64>();
            if !(p < 1.0 - used && p * ineq.coefficient < rhs) {
                return false;
            }
            used += p;
        }
        self.nonempty
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageCheck {
    pub weighted_lipschitz_sum: f64,
    pub contractive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageRakotchCheck {
    pub coefficients: Vec<f64>,
    pub weighted_sum: f64,
    pub sum_ok: bool,
    pub per_map: Vec<bool>,
    pub verdict: bool,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub coefficients: Option<Vec<f64>>,
    pub p_max: usize,
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            coefficients: None,
            p_max: DEFAULT_P_MAX,
            samples: 10_000,
            bins: DEFAULT_ENVELOPE_BINS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub lipschitz: Vec<f64>,
    pub exact: Vec<bool>,
    pub banach: bool,
    /// All per-map envelopes satisfy `λ(t) < 1` on covered bins. On a compact
    /// box Edelstein and Rakotch contractivity coincide, so one flag covers both.
    pub edelstein_evidence: bool,
    pub envelopes: Vec<RakotchEnvelope>,
    pub eventual_p: Option<usize>,
    pub average_region: AverageRegion,
    pub average: Option<AverageCheck>,
    pub average_rakotch: Option<AverageRakotchCheck>,
    pub notes: Vec<String>,
}

pub fn classify(ifs: &IFSystem, opts: &ClassifyOptions) -> Result<ClassificationReport, MapKitError> {
    if opts.p_max == 0 {
        return Err(MapKitError::InvalidArgument("p_max must be ≥ 1".into()));
    }
    let n = ifs.len();
    if let Some(c) = &opts.coefficients {
        if c.len() != n {
            return Err(MapKitError::InvalidArgument(format!(
                "expected {n} coefficients c_i, got {}",
                c.len()
            )));
        }
        if ifs.weights().is_none() {
            return Err(MapKitError::InvalidArgument(
                "average-Rakotch check needs IFS weights".into(),
            ));
        }
    }
    let region = ifs.domain();
    let metric = ifs.metric();
    let mut lipschitz = Vec::with_capacity(n);
    let mut exact = Vec::with_capacity(n);
    let mut envelopes = Vec::with_capacity(n);
    for (i, m) in ifs.maps().iter().enumerate() {
        let seed = opts.seed.wrapping_add(i as u64);
        let l = estimate_lipschitz(m, region, metric, opts.samples, seed)?;
        exact.push(m.exact_lipschitz(metric).is_some());
        lipschitz.push(l);
        envelopes.push(rakotch_envelope(m, region, metric, opts.bins, opts.samples, seed)?);
    }
    let banach = lipschitz.iter().all(|l| *l < 1.0);
    let edelstein_evidence = envelopes.iter().all(|e| e.verdict());

    let mut eventual_p = None;
    for p in 1..=opts.p_max {
        let count = (n as u64).checked_pow(p as u32).unwrap_or(u64::MAX);
        if count > EVENTUAL_WORD_BUDGET {
            break;
        }
        let mut all = true;
        for word in all_words(n, p) {
            let w = ifs.compose_word(&word)?;
            let seed = opts.seed ^ 0x9e37_79b9_7f4a_7c15;
            if estimate_lipschitz(&w, region, metric, opts.samples, seed)? >= 1.0 {
                all = false;
                break;
            }
        }
        if all {
            eventual_p = Some(p);
            break;
        }
    }

    let average_region = AverageRegion::from_lipschitz(&lipschitz);
    let average = ifs.weights().map(|w| {
        let s: f64 = w.iter().zip(&lipschitz).map(|(p, l)| p * l).sum();
        AverageCheck {
            weighted_lipschitz_sum: s,
            contractive: s < 1.0 - AVERAGE_MARGIN,
        }
    });
    let average_rakotch = match (&opts.coefficients, ifs.weights()) {
        (Some(c), Some(w)) => {
            let weighted_sum: f64 = w.iter().zip(c).map(|(p, c)| p * c).sum();
            let sum_ok = weighted_sum <= 1.0 + 1e-12;
            let per_map: Vec<bool> = envelopes
                .iter()
                .zip(c)
                .map(|(e, c)| *c > 0.0 && e.lambda_below(*c))
                .collect();
            Some(AverageRakotchCheck {
                coefficients: c.clone(),
                weighted_sum,
                sum_ok,
                verdict: sum_ok && per_map.iter().all(|b| *b),
                per_map,
            })
        }
        _ => None,
    };
    let mut notes = vec![
        "sampled Lipschitz constants and envelopes are lower-bound heuristics".to_string(),
    ];
    if exact.iter().all(|e| *e) {
        notes.push("all per-map Lipschitz constants are exact".to_string());
    }
    Ok(ClassificationReport {
        lipschitz,
        exact,
        banach,
        edelstein_evidence,
        envelopes,
        eventual_p,
        average_region,
        average,
        average_rakotch,
        notes,
    })
}

/// All words of length `p` over `1..=n` in lexicographic order.
pub fn all_words(n: usize, p: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(p as u32);
    (0..total).map(move |mut code| {
        let mut w = vec![1; p];
        for slot in w.iter_mut().rev() {
            *slot = code % n + 1;
            code /= n;
        }
        w
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapkit::MapSpec;
    use std::f64::consts::FRAC_PI_2;

    fn half_interval() -> Bounds {
        Bounds::interval(0.0, FRAC_PI_2)
    }

    #[test]
    fn affine_lipschitz_is_exact() {
        let m = MapSpec::scalar(0.5, 0.1);
        let l = estimate_lipschitz(&m, &Bounds::interval(0.0, 1.0), &Metric::Euclidean, 100, 1).unwrap();
        assert_eq!(l, 0.5);
    }

    #[test]
    fn sampled_lipschitz_examples() {
        let m = MapSpec::expr(&["2*sin(x)"]).unwrap();
        let l = estimate_lipschitz(&m, &half_interval(), &Metric::Euclidean, 10_000, 7).unwrap();
        assert!((l - 2.0).abs() <= 0.1 && l <= 2.0, "{l}");

        let w1 = MapSpec::expr(&["max(0.5, 1-x)"]).unwrap();
        let l = estimate_lipschitz(&w1, &Bounds::interval(0.0, 1.0), &Metric::Euclidean, 10_000, 7).unwrap();
        assert!((l - 1.0).abs() < 1e-9, "{l}");
    }

    #[test]
    fn degenerate_region_rejected() {
        let m = MapSpec::expr(&["sin(x)"]).unwrap();
        assert_eq!(
            estimate_lipschitz(&m, &Bounds::interval(1.0, 1.0), &Metric::Euclidean, 10, 0),
            Err(MapKitError::DegenerateRegion)
        );
    }

    #[test]
    fn envelope_examples() {
        let region = Bounds::interval(0.0, 1.0);
        let half = MapSpec::expr(&["x/2"]).unwrap();
        let e = rakotch_envelope(&half, &region, &Metric::Euclidean, 8, 800, 3).unwrap();
        assert!(e.covered.iter().all(|c| *c));
        assert!(e.lambda.iter().all(|l| (l - 0.5).abs() < 1e-9));
        assert!(e.verdict());

        let double = MapSpec::expr(&["2*x"]).unwrap();
        let e = rakotch_envelope(&double, &region, &Metric::Euclidean, 8, 800, 3).unwrap();
        assert!(e.lambda.iter().all(|l| (l - 2.0).abs() < 1e-9));
        assert!(!e.verdict());
        assert!(e.to_comparison().is_err());
    }

    #[test]
    fn sine_envelope_tracks_sin_t_over_t() {
        let sin = MapSpec::expr(&["sin(x)"]).unwrap();
        let e = rakotch_envelope(&sin, &half_interval(), &Metric::Euclidean, 32, 32_000, 11).unwrap();
        assert!(e.lambda.windows(2).all(|w| w[1] <= w[0]));
        for k in 0..32 {
            let (a, b) = (e.edges[k], e.edges[k + 1]);
            // the bin maximum lies between the ratio at its two edges
            assert!(e.raw[k] <= a.sin() / a + 1e-12);
            assert!(e.raw[k] >= b.sin() / b - 1e-12, "bin {k}: {} < {}", e.raw[k], b.sin() / b);
        }
    }

    #[test]
    fn average_region_for_two_maps() {
        let r = AverageRegion::from_lipschitz(&[0.5, 2.0]);
        assert_eq!(r.base, 0);
        assert!(r.nonempty);
        let b = r.inequalities[0].bound().unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.contains(&[0.75, 0.25]));
        assert!(!r.contains(&[0.6, 0.4]));
        assert_eq!(r.inequalities[0].to_string(), "p2*(1.5) < 0.5");
        assert!(!AverageRegion::from_lipschitz(&[1.0, 2.0]).nonempty);
    }

    #[test]
    fn three_map_region_matches_weighted_sum() {
        let c = [0.9, 0.3, 1.4];
        let r = AverageRegion::from_lipschitz(&c);
        assert_eq!(r.base, 1);
        for w in [[0.2, 0.5, 0.3], [0.1, 0.2, 0.7], [0.3, 0.3, 0.4], [0.05, 0.9, 0.05]] {
            let s: f64 = w.iter().zip(&c).map(|(p, c)| p * c).sum();
            assert_eq!(r.contains(&w), s < 1.0, "{w:?}");
        }
    }

    #[test]
    fn words_enumerate_lexicographically() {
        let w: Vec<_> = all_words(2, 2).collect();
        assert_eq!(w, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    }
}
