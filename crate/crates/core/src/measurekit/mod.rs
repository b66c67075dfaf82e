//! Finitely supported probability measures, the Markov operator of a
//! weighted IFS, and exact Monge–Kantorovich distances.

mod merge;
mod transport;

pub use transport::{solve as solve_transport, TransportPlan, TransportSolution, CERTIFICATE_TOL};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Bounds, Metric, Point};
use crate::hyperspace::{HyperspaceError, PointCloud};
use crate::mapkit::{estimate_lipschitz, IFSystem, MapError, MapKitError, PointMap};

/// Markov steps producing more atoms than this fail; raise δ instead.
pub const DEFAULT_ATOM_BUDGET: usize = 100_000;
/// `|atoms(μ)|·|atoms(ν)|` limit for exact transport.
pub const TRANSPORT_BUDGET: usize = 10_000_000;
/// Exact Bernoulli mode is used up to this many words.
pub const EXACT_WORD_BUDGET: u64 = 100_000;
const SAMPLE_BUDGET: u64 = 100_000_000;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("{what} {size} exceeds budget {budget}")]
    Budget {
        what: &'static str,
        size: usize,
        budget: usize,
    },
    #[error("infeasible transport problem: {0}")]
    Infeasible(String),
    #[error("transport optimum not certified: reduced cost {min_reduced_cost:e}")]
    NotCertified { min_reduced_cost: f64 },
    #[error("no convergence after {iterations} iterations (last step {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no atom has weight above {floor}")]
    EmptySupport { floor: f64 },
    #[error("the IFS has no probability weights")]
    MissingWeights,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    MapKit(#[from] MapKitError),
    #[error(transparent)]
    Hyperspace(#[from] HyperspaceError),
}

/// Probability measure with finitely many atoms, kept in lexicographic
/// order with pairwise distances `≥ δ/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
    dim: usize,
    metric: Metric,
    merge_radius: f64,
    /// Transport cost spent merging atoms at construction.
    merge_cost: f64,
}

impl DiscreteMeasure {
    /// Zero weights are dropped; the rest must be positive and sum to 1.
    pub fn new(
        dim: usize,
        metric: Metric,
        atoms: Vec<Point>,
        weights: Vec<f64>,
        merge_radius: f64,
    ) -> Result<Self, MeasureError> {
        if atoms.len() != weights.len() {
            return Err(MeasureError::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if !(1..=3).contains(&dim) || (metric == Metric::Circle && dim != 1) {
            return Err(MeasureError::InvalidMeasure(format!("bad dimension {dim} for {}", metric.name())));
        }
        if !(merge_radius >= 0.0 && merge_radius.is_finite()) {
            return Err(MeasureError::InvalidMeasure("merge radius must be finite and ≥ 0".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(MeasureError::InvalidMeasure(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(MeasureError::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        let pairs: Vec<(Point, f64)> = atoms
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .map(|(p, w)| (metric.normalize(p), w))
            .collect();
        if pairs.is_empty() {
            return Err(MeasureError::InvalidMeasure("no atom with positive weight".into()));
        }
        if let Some((p, _)) = pairs.iter().find(|(p, _)| p.iter().any(|c| !c.is_finite())) {
            return Err(MeasureError::InvalidMeasure(format!("non-finite atom {p:?}")));
        }
        Ok(Self::from_pairs(dim, metric, pairs, merge_radius))
    }

    fn from_pairs(dim: usize, metric: Metric, pairs: Vec<(Point, f64)>, merge_radius: f64) -> Self {
        let (merged, merge_cost) = merge::agglomerate(metric, dim, pairs, merge_radius / 2.0);
        let (atoms, weights) = merged.into_iter().unzip();
        Self {
            atoms,
            weights,
            dim,
            metric,
            merge_radius,
            merge_cost,
        }
    }

    pub fn dirac(dim: usize, metric: Metric, x: Point) -> Self {
        Self::new(dim, metric, vec![x], vec![1.0], 0.0).expect("finite point")
    }

    /// Equal weights on the given points.
    pub fn uniform(dim: usize, metric: Metric, atoms: Vec<Point>) -> Result<Self, MeasureError> {
        let n = atoms.len();
        if n == 0 {
            return Err(MeasureError::InvalidMeasure("no atoms".into()));
        }
        Self::new(dim, metric, atoms, vec![1.0 / n as f64; n], 0.0)
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn merge_radius(&self) -> f64 {
        self.merge_radius
    }

    /// Upper bound on the d_MK displacement caused by merging.
    pub fn merge_cost(&self) -> f64 {
        self.merge_cost
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Coordinate-wise mean (as numbers, also on the circle).
    pub fn mean(&self) -> Point {
        let mut m = [0.0; 3];
        for (p, w) in self.atoms.iter().zip(&self.weights) {
            for i in 0..self.dim {
                m[i] += w * p[i];
            }
        }
        m
    }

    pub fn mass_in(&self, region: &Bounds) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| region.contains(p))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `t·self + (1−t)·other`, merged at `self`'s radius.
    pub fn mix(&self, t: f64, other: &DiscreteMeasure) -> Result<Self, MeasureError> {
        if self.dim != other.dim || self.metric != other.metric {
            return Err(MeasureError::InvalidArgument("mixing measures on different spaces".into()));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(MeasureError::InvalidArgument(format!("mixing weight {t} outside [0, 1]")));
        }
        let pairs = self
            .iter()
            .map(|(p, w)| (*p, t * w))
            .chain(other.iter().map(|(p, w)| (*p, (1.0 - t) * w)))
            .filter(|(_, w)| *w > 0.0)
            .collect();
        Ok(Self::from_pairs(self.dim, self.metric, pairs, self.merge_radius))
    }
}

/// `w♯μ`: atoms moved pointwise, coincident images merged.
pub fn push_forward<M: PointMap + ?Sized>(map: &M, mu: &DiscreteMeasure) -> Result<DiscreteMeasure, MeasureError> {
    if map.dim() != mu.dim {
        return Err(MeasureError::InvalidArgument(format!(
            "map dimension {} vs measure dimension {}",
            map.dim(),
            mu.dim
        )));
    }
    let pairs = mu
        .iter()
        .map(|(p, w)| Ok((mu.metric.normalize(map.apply(p)?), w)))
        .collect::<Result<Vec<_>, MapError>>()?;
    Ok(DiscreteMeasure::from_pairs(mu.dim, mu.metric, pairs, 0.0))
}

fn ifs_weights(ifs: &IFSystem) -> Result<&[f64], MeasureError> {
    ifs.weights().ok_or(MeasureError::MissingWeights)
}

fn check_space(ifs: &IFSystem, mu: &DiscreteMeasure) -> Result<(), MeasureError> {
    if ifs.dim() != mu.dim || *ifs.metric() != mu.metric {
        return Err(MeasureError::InvalidArgument("measure and IFS live on different spaces".into()));
    }
    Ok(())
}

/// `Mμ = Σ p_i · w_i♯μ`, then merged at radius `δ`.
pub fn markov_step(ifs: &IFSystem, mu: &DiscreteMeasure, merge_radius: f64) -> Result<DiscreteMeasure, MeasureError> {
    markov_step_budget(ifs, mu, merge_radius, DEFAULT_ATOM_BUDGET)
}

pub fn markov_step_budget(
    ifs: &IFSystem,
    mu: &DiscreteMeasure,
    merge_radius: f64,
    budget: usize,
) -> Result<DiscreteMeasure, MeasureError> {
    let p = ifs_weights(ifs)?;
    check_space(ifs, mu)?;
    if !(merge_radius >= 0.0) {
        return Err(MeasureError::InvalidArgument("merge radius must be ≥ 0".into()));
    }
    let per_map = (0..ifs.len())
        .into_par_iter()
        .map(|i| {
            mu.iter()
                .map(|(x, w)| Ok((ifs.apply(i, x)?, p[i] * w)))
                .collect::<Result<Vec<_>, MapError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(Point, f64)> = per_map.concat().into_iter().filter(|(_, w)| *w > 0.0).collect();
    let out = DiscreteMeasure::from_pairs(mu.dim, mu.metric, pairs, merge_radius);
    if out.len() > budget {
        return Err(MeasureError::Budget {
            what: "atom count",
            size: out.len(),
            budget,
        });
    }
    Ok(out)
}

/// Exact `d_MK(μ, ν)` and an optimal plan (rows index `μ`, columns `ν`).
pub fn monge_kantorovich(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan), MeasureError> {
    let s = transport_solution(mu, nu)?;
    Ok((s.value, s.plan))
}

/// Like [`monge_kantorovich`], also returning duals and the certificate.
pub fn transport_solution(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<TransportSolution, MeasureError> {
    if mu.dim != nu.dim || mu.metric != nu.metric {
        return Err(MeasureError::InvalidArgument("measures live on different spaces".into()));
    }
    let size = mu.len().saturating_mul(nu.len());
    if size > TRANSPORT_BUDGET {
        return Err(MeasureError::Budget {
            what: "transport problem size",
            size,
            budget: TRANSPORT_BUDGET,
        });
    }
    let n = nu.len();
    let mut cost = vec![0.0; size];
    cost.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, c) in row.iter_mut().enumerate() {
            *c = mu.metric.dist(&mu.atoms[i], &nu.atoms[j]);
        }
    });
    transport::solve(&mu.weights, &nu.weights, &cost)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub before: f64,
    pub after: f64,
    /// `None` when `d_MK(μ, ν) = 0`.
    pub ratio: Option<f64>,
    pub identical: bool,
    /// `Σ p_i Lip(w_i)`, exact for affine maps and sampled otherwise.
    pub bound: f64,
}

/// `d_MK(Mμ, Mν)/d_MK(μ, ν)` with unmerged Markov steps.
pub fn markov_contraction_ratio(
    ifs: &IFSystem,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<ContractionReport, MeasureError> {
    let p = ifs_weights(ifs)?;
    let before = monge_kantorovich(mu, nu)?.0;
    let after = monge_kantorovich(&markov_step(ifs, mu, 0.0)?, &markov_step(ifs, nu, 0.0)?)?.0;
    let mut bound = 0.0;
    for (i, m) in ifs.maps().iter().enumerate() {
        bound += p[i] * estimate_lipschitz(m, ifs.domain(), ifs.metric(), 10_000, i as u64)?;
    }
    Ok(ContractionReport {
        before,
        after,
        ratio: (before > 0.0).then(|| after / before),
        identical: before == 0.0,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantResult {
    pub measure: DiscreteMeasure,
    /// `d_MK(μ_k, μ_{k+1})` per iteration.
    pub trace: Vec<f64>,
    /// `d_MK(Mμ̂, μ̂)` with an unmerged step.
    pub residual: f64,
    /// Sum of merge costs over all steps.
    pub merge_error: f64,
}

/// Iterates `μ ↦ Mμ` until consecutive iterates are within `tol` in d_MK.
pub fn invariant_measure(
    ifs: &IFSystem,
    mu0: &DiscreteMeasure,
    tol: f64,
    max_iter: usize,
    merge_radius: f64,
) -> Result<InvariantResult, MeasureError> {
    if !(tol > 0.0) {
        return Err(MeasureError::InvalidArgument("tol must be > 0".into()));
    }
    let mut mu = mu0.clone();
    let mut trace = Vec::new();
    let mut merge_error = 0.0;
    for _ in 0..max_iter {
        let next = markov_step(ifs, &mu, merge_radius)?;
        merge_error += next.merge_cost;
        let d = monge_kantorovich(&mu, &next)?.0;
        trace.push(d);
        mu = next;
        if d <= tol {
            let residual = monge_kantorovich(&markov_step(ifs, &mu, 0.0)?, &mu)?.0;
            return Ok(InvariantResult {
                measure: mu,
                trace,
                residual,
                merge_error,
            });
        }
    }
    Err(MeasureError::NoConvergence {
        iterations: max_iter,
        residual: trace.last().copied().unwrap_or(f64::INFINITY),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MannResult {
    pub measure: DiscreteMeasure,
    /// `d_MK(Mν_n, ν_n)`.
    pub residual: f64,
    pub merge_error: f64,
}

/// Cesàro average `ν_n = (1/n) Σ_{k<n} M^k μ0`.
pub fn mann_average(
    ifs: &IFSystem,
    mu0: &DiscreteMeasure,
    n: usize,
    merge_radius: f64,
) -> Result<MannResult, MeasureError> {
    if n == 0 {
        return Err(MeasureError::InvalidArgument("n must be ≥ 1".into()));
    }
    ifs_weights(ifs)?;
    check_space(ifs, mu0)?;
    let mut iterate = mu0.clone();
    let mut avg = mu0.clone();
    let mut merge_error = 0.0;
    for k in 1..n {
        iterate = markov_step(ifs, &iterate, merge_radius)?;
        merge_error += iterate.merge_cost;
        // ν_{k+1} = k/(k+1)·ν_k + 1/(k+1)·M^k μ0
        let t = k as f64 / (k + 1) as f64;
        let mut mixed = avg.mix(t, &iterate)?;
        mixed.merge_radius = merge_radius;
        let pairs: Vec<(Point, f64)> = mixed.iter().map(|(p, w)| (*p, w)).collect();
        let next = DiscreteMeasure::from_pairs(mu0.dim, mu0.metric, pairs, merge_radius);
        merge_error += next.merge_cost;
        avg = next;
    }
    let residual = monge_kantorovich(&markov_step(ifs, &avg, 0.0)?, &avg)?.0;
    Ok(MannResult {
        measure: avg,
        residual,
        merge_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BernoulliMode {
    /// All `N^k` words with cylinder weights.
    Exact,
    /// I.i.d. sampled words with equal weights.
    Sampled,
}

/// Image of the Bernoulli measure under the depth-`k` coding map, with the
/// domain center as base point. Exact when `N^k ≤ 1e5`.
pub fn bernoulli_pushforward(
    ifs: &IFSystem,
    depth: usize,
    samples: usize,
    seed: u64,
    merge_radius: f64,
) -> Result<(DiscreteMeasure, BernoulliMode), MeasureError> {
    let p = ifs_weights(ifs)?;
    bernoulli_pushforward_with(ifs, p, depth, samples, seed, merge_radius)
}

/// [`bernoulli_pushforward`] with explicit symbol probabilities, which may
/// include zeros (degenerate Bernoulli measures).
pub fn bernoulli_pushforward_with(
    ifs: &IFSystem,
    p: &[f64],
    depth: usize,
    samples: usize,
    seed: u64,
    merge_radius: f64,
) -> Result<(DiscreteMeasure, BernoulliMode), MeasureError> {
    let total: f64 = p.iter().sum();
    if p.len() != ifs.len() || p.iter().any(|x| !(*x >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
        return Err(MeasureError::InvalidArgument(format!(
            "symbol probabilities must be {} nonnegative numbers summing to 1",
            ifs.len()
        )));
    }
    if depth == 0 {
        return Err(MeasureError::InvalidArgument("depth must be ≥ 1".into()));
    }
    let words = (ifs.len() as u64).checked_pow(depth as u32).unwrap_or(u64::MAX);
    let base = ifs.metric().normalize(ifs.domain().center());
    if words <= EXACT_WORD_BUDGET {
        // level expansion: every word's image with its cylinder weight
        let mut level = vec![(base, 1.0)];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * ifs.len());
            for (x, w) in &level {
                for (i, pi) in p.iter().enumerate() {
                    if *pi > 0.0 {
                        next.push((ifs.apply(i, x)?, w * pi));
                    }
                }
            }
            level = next;
        }
        let mu = DiscreteMeasure::from_pairs(ifs.dim(), *ifs.metric(), level, merge_radius);
        return Ok((mu, BernoulliMode::Exact));
    }
    if samples == 0 {
        return Err(MeasureError::InvalidArgument("samples must be ≥ 1".into()));
    }
    let work = (depth as u64).saturating_mul(samples as u64);
    if work > SAMPLE_BUDGET {
        return Err(MeasureError::Budget {
            what: "depth·samples",
            size: work as usize,
            budget: SAMPLE_BUDGET as usize,
        });
    }
    let dist = WeightedIndex::new(p).map_err(|e| MeasureError::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 1.0 / samples as f64;
    let mut pairs = Vec::with_capacity(samples);
    let mut word = vec![0usize; depth];
    for _ in 0..samples {
        word.iter_mut().for_each(|s| *s = dist.sample(&mut rng));
        // w_{α1} ∘ … ∘ w_{αk}: innermost symbol first
        let mut x = base;
        for &s in word.iter().rev() {
            x = ifs.apply(s, &x)?;
        }
        pairs.push((x, w));
    }
    let mu = DiscreteMeasure::from_pairs(ifs.dim(), *ifs.metric(), pairs, merge_radius);
    Ok((mu, BernoulliMode::Sampled))
}

/// Atoms with weight above `weight_floor` as a point cloud.
pub fn support_cloud(mu: &DiscreteMeasure, weight_floor: f64) -> Result<PointCloud, MeasureError> {
    let pts: Vec<Point> = mu
        .iter()
        .filter(|(_, w)| *w > weight_floor)
        .map(|(p, _)| *p)
        .collect();
    if pts.is_empty() {
        return Err(MeasureError::EmptySupport { floor: weight_floor });
    }
    Ok(PointCloud::new(mu.dim, mu.metric, pts, 0.0)?)
}
