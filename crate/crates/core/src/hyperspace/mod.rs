//! Finite ε-net model of the hyperspace of nonempty compact sets.

mod grid;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{lex_cmp, Bounds, Metric, Point};
use crate::mapkit::{IFSystem, MapError};

pub(crate) use grid::SpatialGrid;

/// Clouds above this many points are rejected by [`attractor`] and friends.
pub const DEFAULT_CLOUD_BUDGET: usize = 1_000_000;
/// Escape box: the domain with half-extents scaled by this factor.
pub const ESCAPE_FACTOR: f64 = 10.0;
/// Brute force is used below this many distance evaluations.
const BRUTE_FORCE_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperspaceError {
    #[error("point cloud is empty")]
    Empty,
    #[error("dimension or metric mismatch between clouds")]
    Mismatch,
    #[error("cloud size {size} exceeds budget {budget}; prune_eps is too small")]
    Budget { size: usize, budget: usize },
    #[error("iteration {iteration}: point {point:?} escaped the domain")]
    Escape { iteration: usize, point: Point },
    #[error("trapping precondition violated: excess {excess:e} > {prune_eps:e} at {worst:?}")]
    Trapping {
        excess: f64,
        prune_eps: f64,
        worst: Point,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Finite nonempty point set standing in for a compact set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    dim: usize,
    metric: Metric,
    resolution: f64,
    bbox: Bounds,
}

impl PointCloud {
    /// Builds a cloud pruned to an ε-net at `resolution` (see [`prune`]).
    pub fn new(
        dim: usize,
        metric: Metric,
        points: Vec<Point>,
        resolution: f64,
    ) -> Result<Self, HyperspaceError> {
        if points.is_empty() {
            return Err(HyperspaceError::Empty);
        }
        if !(resolution >= 0.0) {
            return Err(HyperspaceError::InvalidArgument("resolution must be ≥ 0".into()));
        }
        let points = prune(metric, dim, points, resolution);
        let bbox = Bounds::enclosing(dim, &points).expect("nonempty");
        Ok(Self {
            points,
            dim,
            metric,
            resolution,
            bbox,
        })
    }

    pub fn euclidean(dim: usize, points: Vec<Point>) -> Result<Self, HyperspaceError> {
        Self::new(dim, Metric::Euclidean, points, 0.0)
    }

    /// Uniform grid over `[lo, hi]` with `n ≥ 2` points.
    pub fn grid_1d(lo: f64, hi: f64, n: usize) -> Self {
        let n = n.max(2);
        let pts = (0..n)
            .map(|i| crate::geometry::pt1(lo + (hi - lo) * i as f64 / (n - 1) as f64))
            .collect();
        Self::euclidean(1, pts).expect("nonempty grid")
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn bbox(&self) -> &Bounds {
        &self.bbox
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }
}

/// Deterministic greedy ε-net: points are scanned in lexicographic order and
/// a point is kept iff no kept point lies strictly closer than `eps/2`.
/// Every dropped point is therefore within `eps/2` of a kept one. With
/// `eps = 0` only exact duplicates are removed.
pub fn prune(metric: Metric, dim: usize, mut points: Vec<Point>, eps: f64) -> Vec<Point> {
    points.sort_by(lex_cmp);
    if eps <= 0.0 {
        points.dedup_by(|a, b| metric.dist(a, b) == 0.0);
        return points;
    }
    let radius = eps / 2.0;
    let origin = points[0];
    let mut grid = SpatialGrid::new(metric, dim, origin, radius);
    let mut kept: Vec<Point> = Vec::new();
    for p in points {
        if !grid.any_within(&p, &kept, radius) {
            grid.insert(kept.len(), &p);
            kept.push(p);
        }
    }
    kept
}

fn check_compatible(a: &PointCloud, b: &PointCloud) -> Result<(), HyperspaceError> {
    if a.dim != b.dim || a.metric != b.metric {
        return Err(HyperspaceError::Mismatch);
    }
    Ok(())
}

/// `e(A, B) = max_{a∈A} min_{b∈B} d(a, b)`; grid-accelerated for large inputs.
pub fn excess(a: &PointCloud, b: &PointCloud) -> Result<f64, HyperspaceError> {
    check_compatible(a, b)?;
    if a.len().saturating_mul(b.len()) <= BRUTE_FORCE_LIMIT {
        return Ok(excess_brute(a, b));
    }
    Ok(excess_grid(a, b))
}

pub fn excess_brute(a: &PointCloud, b: &PointCloud) -> f64 {
    a.points
        .par_iter()
        .map(|p| {
            b.points
                .iter()
                .map(|q| a.metric.dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

pub fn excess_grid(a: &PointCloud, b: &PointCloud) -> f64 {
    let Some(grid) = SpatialGrid::build(b.metric, b.dim, &b.points) else {
        return excess_brute(a, b);
    };
    a.points
        .par_iter()
        .map(|p| grid.nearest(p, &b.points))
        .reduce(|| 0.0, f64::max)
}

/// Excess together with the point of `A` attaining it.
pub fn excess_witness(a: &PointCloud, b: &PointCloud) -> Result<(f64, Point), HyperspaceError> {
    check_compatible(a, b)?;
    let grid = SpatialGrid::build(b.metric, b.dim, &b.points);
    let nearest = |p: &Point| match &grid {
        Some(g) => g.nearest(p, &b.points),
        None => b
            .points
            .iter()
            .map(|q| a.metric.dist(p, q))
            .fold(f64::INFINITY, f64::min),
    };
    Ok(a
        .points
        .iter()
        .map(|p| (nearest(p), *p))
        .fold((0.0, a.points[0]), |acc, x| if x.0 > acc.0 { x } else { acc }))
}

/// `d_H(A, B) = max{e(A, B), e(B, A)}`.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64, HyperspaceError> {
    Ok(excess(a, b)?.max(excess(b, a)?))
}

/// `⋃_i w_i(S)`, ε-pruned at `prune_eps`.
pub fn hutchinson(ifs: &IFSystem, s: &PointCloud, prune_eps: f64) -> Result<PointCloud, HyperspaceError> {
    let image = hutchinson_image(ifs, s.points())?;
    PointCloud::new(s.dim, *ifs.metric(), image, prune_eps)
}

fn hutchinson_image(ifs: &IFSystem, points: &[Point]) -> Result<Vec<Point>, HyperspaceError> {
    let per_map: Vec<Vec<Point>> = (0..ifs.len())
        .into_par_iter()
        .map(|i| points.iter().map(|p| ifs.apply(i, p)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    Ok(per_map.concat())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub size: usize,
    /// `d_H(S_k, S_{k+1})`.
    pub step: f64,
    /// `d_H(F(S_{k+1}), S_{k+1})`, i.e. the next step distance.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub prune_eps: f64,
    pub tol: f64,
}

impl ConvergenceTrace {
    /// Ratios of consecutive step distances.
    pub fn step_ratios(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|w| w[1].step / w[0].step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Defaults to `tol / 4`.
    pub prune_eps: Option<f64>,
    pub budget: usize,
}

impl AttractorOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            prune_eps: None,
            budget: DEFAULT_CLOUD_BUDGET,
        }
    }

    pub fn with_prune_eps(mut self, eps: f64) -> Self {
        self.prune_eps = Some(eps);
        self
    }

    pub fn prune_eps(&self) -> f64 {
        self.prune_eps.unwrap_or(self.tol / 4.0)
    }
}

fn check_escape(ifs: &IFSystem, s: &PointCloud, iteration: usize) -> Result<(), HyperspaceError> {
    if *ifs.metric() == Metric::Circle {
        return Ok(());
    }
    let escape = ifs.domain().scaled(ESCAPE_FACTOR);
    match s.points.iter().find(|p| !escape.contains(p)) {
        Some(p) => Err(HyperspaceError::Escape {
            iteration,
            point: *p,
        }),
        None => Ok(()),
    }
}

/// Iterates the Hutchinson operator from `seed` until the step distance
/// drops to `tol` or `max_iter` steps were taken.
pub fn attractor(
    ifs: &IFSystem,
    seed: &PointCloud,
    opts: &AttractorOptions,
) -> Result<(PointCloud, ConvergenceTrace), HyperspaceError> {
    if !(opts.tol > 0.0) {
        return Err(HyperspaceError::InvalidArgument("tol must be positive".into()));
    }
    let eps = opts.prune_eps();
    let mut trace = ConvergenceTrace {
        records: Vec::new(),
        converged: false,
        prune_eps: eps,
        tol: opts.tol,
    };
    let mut s = PointCloud::new(seed.dim, *ifs.metric(), seed.points.clone(), eps)?;
    for k in 0..opts.max_iter {
        let next = hutchinson(ifs, &s, eps)?;
        if next.len() > opts.budget {
            return Err(HyperspaceError::Budget {
                size: next.len(),
                budget: opts.budget,
            });
        }
        check_escape(ifs, &next, k + 1)?;
        let step = hausdorff(&s, &next)?;
        if let Some(prev) = trace.records.last_mut() {
            prev.residual = step;
        }
        trace.records.push(TraceRecord {
            k,
            size: next.len(),
            step,
            residual: f64::NAN,
        });
        s = next;
        if step <= opts.tol {
            trace.converged = true;
            break;
        }
    }
    if let Some(last) = trace.records.last_mut() {
        last.residual = invariance_residual(ifs, &s, eps)?;
    }
    Ok((s, trace))
}

/// `d_H(F(A), A)`.
pub fn invariance_residual(ifs: &IFSystem, a: &PointCloud, prune_eps: f64) -> Result<f64, HyperspaceError> {
    hausdorff(&hutchinson(ifs, a, prune_eps)?, a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// `e(F(X0), X0)`, the relaxed trapping check.
    pub trapping_excess: f64,
    /// `e(F^{k+1}(X0), F^k(X0))` for `k = 0..n`.
    pub excesses: Vec<f64>,
    /// Every excess is `≤ prune_eps`.
    pub monotone: bool,
}

/// `F^n(X0)` as the decreasing approximant of `⋂_n F^n(X0)`, for a seed
/// satisfying `F(X0) ⊆ B(X0, prune_eps)`.
pub fn maximal_attractor(
    ifs: &IFSystem,
    x0: &PointCloud,
    n: usize,
    prune_eps: f64,
) -> Result<(PointCloud, MonotonicityReport), HyperspaceError> {
    let first = hutchinson(ifs, x0, prune_eps)?;
    let (trapping_excess, worst) = excess_witness(&first, x0)?;
    if trapping_excess > prune_eps {
        return Err(HyperspaceError::Trapping {
            excess: trapping_excess,
            prune_eps,
            worst,
        });
    }
    let mut excesses = Vec::with_capacity(n);
    let mut current = x0.clone();
    let mut next = Some(first);
    for _ in 0..n {
        let image = match next.take() {
            Some(c) => c,
            None => hutchinson(ifs, &current, prune_eps)?,
        };
        if image.len() > DEFAULT_CLOUD_BUDGET {
            return Err(HyperspaceError::Budget {
                size: image.len(),
                budget: DEFAULT_CLOUD_BUDGET,
            });
        }
        excesses.push(excess(&image, &current)?);
        current = image;
    }
    let monotone = excesses.iter().all(|e| *e <= prune_eps);
    Ok((
        current,
        MonotonicityReport {
            trapping_excess,
            excesses,
            monotone,
        },
    ))
}
