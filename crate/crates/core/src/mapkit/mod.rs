//! Maps, iterated function systems and word compositions, plus the
//! numerical contraction analysis built on top of them.

mod analysis;
mod comparison;
mod remetrize;

pub use analysis::{
    all_words, classify, estimate_lipschitz, rakotch_envelope, sampled_lipschitz, AverageCheck,
    AverageRakotchCheck, AverageRegion, ClassificationReport, ClassifyOptions, RakotchEnvelope,
    WeightInequality, DEFAULT_ENVELOPE_BINS, DEFAULT_P_MAX,
};
pub use comparison::{iterate_modulus, modulus_join, ComparisonFunction};
pub use remetrize::{default_remetrization_weights, remetrized_distance, Remetrized};

use nalgebra::Matrix3;
use thiserror::Error;

use crate::exprdsl::{EvalError, Expression};
use crate::geometry::{Bounds, Metric, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map {map}: coordinate {coordinate} failed at {point:?}: {source}")]
    Eval {
        map: usize,
        coordinate: usize,
        point: Point,
        #[source]
        source: EvalError,
    },
}

impl MapError {
    fn with_map(self, index: usize) -> Self {
        match self {
            MapError::Eval {
                coordinate,
                point,
                source,
                ..
            } => MapError::Eval {
                map: index,
                coordinate,
                point,
                source,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapKitError {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid IFS: {0}")]
    InvalidIfs(String),
    #[error("symbol {symbol} out of range 1..={n}")]
    SymbolOutOfRange { symbol: usize, n: usize },
    #[error("Picard iteration did not converge in {iterations} steps (last residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Point,
    },
    #[error("degenerate sampling region (zero volume)")]
    DegenerateRegion,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enumeration budget exceeded: {needed} > {budget}")]
    Budget { needed: u64, budget: u64 },
    #[error(transparent)]
    Map(#[from] MapError),
}

/// Affine map `x ↦ A x + b` on R^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub dim: usize,
    pub matrix: [[f64; 3]; 3],
    pub offset: Point,
}

impl Affine {
    /// `matrix` is row-major d×d, `offset` has length d.
    pub fn new(matrix: &[f64], offset: &[f64]) -> Result<Self, MapKitError> {
        let d = offset.len();
        if !(1..=3).contains(&d) || matrix.len() != d * d {
            return Err(MapKitError::InvalidMap(format!(
                "affine map needs a {d}x{d} matrix, got {} entries",
                matrix.len()
            )));
        }
        if matrix.iter().chain(offset).any(|v| !v.is_finite()) {
            return Err(MapKitError::InvalidMap("non-finite affine coefficient".into()));
        }
        let mut m = [[0.0; 3]; 3];
        for r in 0..d {
            for c in 0..d {
                m[r][c] = matrix[r * d + c];
            }
        }
        Ok(Self {
            dim: d,
            matrix: m,
            offset: crate::geometry::point_from_slice(offset),
        })
    }

    /// One-dimensional `x ↦ a x + b`.
    pub fn scalar(a: f64, b: f64) -> Self {
        Self::new(&[a], &[b]).expect("finite coefficients")
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(dim) {
            row[i] = 1.0;
        }
        Self {
            dim,
            matrix: m,
            offset: [0.0; 3],
        }
    }

    #[inline]
    pub fn apply(&self, p: &Point) -> Point {
        let mut out = self.offset;
        for (r, o) in out.iter_mut().enumerate().take(self.dim) {
            for c in 0..self.dim {
                *o += self.matrix[r][c] * p[c];
            }
        }
        out
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        let mut m = [[0.0; 3]; 3];
        for r in 0..self.dim {
            for c in 0..self.dim {
                m[r][c] = (0..self.dim)
                    .map(|k| self.matrix[r][k] * inner.matrix[k][c])
                    .sum();
            }
        }
        Affine {
            dim: self.dim,
            matrix: m,
            offset: self.apply(&inner.offset),
        }
    }

    /// Largest singular value of the linear part.
    pub fn operator_norm(&self) -> f64 {
        let m = Matrix3::from_fn(|r, c| self.matrix[r][c]);
        m.singular_values().max()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprMap {
    pub dim: usize,
    pub coords: Vec<Expression>,
}

impl ExprMap {
    pub fn new(coords: Vec<Expression>) -> Result<Self, MapKitError> {
        let dim = coords.len();
        if !(1..=3).contains(&dim) {
            return Err(MapKitError::InvalidMap(format!(
                "expression map needs 1..=3 coordinates, got {dim}"
            )));
        }
        for (i, e) in coords.iter().enumerate() {
            if let Some(v) = e.free_variable_indices().into_iter().find(|v| *v >= dim) {
                return Err(MapKitError::InvalidMap(format!(
                    "coordinate {i} uses variable `{}` outside dimension {dim}",
                    crate::exprdsl::VARIABLES[v]
                )));
            }
        }
        Ok(Self { dim, coords })
    }

    pub fn parse(sources: &[&str]) -> Result<Self, MapKitError> {
        let vars = &crate::exprdsl::VARIABLES[..sources.len().clamp(1, 3)];
        let coords = sources
            .iter()
            .map(|s| Expression::parse_with_vars(s, vars))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| MapKitError::InvalidMap(e.to_string()))?;
        Self::new(coords)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `x ↦ x + r (mod 1)` on the circle.
    CircleRotation { r: f64 },
    Identity { dim: usize },
}

/// One map of an IFS.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Affine(Affine),
    Expr(ExprMap),
    Builtin(Builtin),
}

/// Anything that maps points to points: a single map or a word composition.
pub trait PointMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, p: &Point) -> Result<Point, MapError>;
    /// Exact affine form when available.
    fn as_affine(&self) -> Option<Affine> {
        None
    }
    /// Exact Lipschitz constant under `metric`, when known in closed form.
    fn exact_lipschitz(&self, metric: &Metric) -> Option<f64> {
        match metric {
            Metric::Euclidean => self.as_affine().map(|a| a.operator_norm()),
            Metric::Circle => None,
        }
    }
}

impl MapSpec {
    pub fn affine(matrix: &[f64], offset: &[f64]) -> Result<Self, MapKitError> {
        Affine::new(matrix, offset).map(MapSpec::Affine)
    }

    pub fn scalar(a: f64, b: f64) -> Self {
        MapSpec::Affine(Affine::scalar(a, b))
    }

    pub fn expr(sources: &[&str]) -> Result<Self, MapKitError> {
        ExprMap::parse(sources).map(MapSpec::Expr)
    }

    pub fn circle_rotation(r: f64) -> Self {
        MapSpec::Builtin(Builtin::CircleRotation { r })
    }
}

impl PointMap for MapSpec {
    fn dim(&self) -> usize {
        match self {
            MapSpec::Affine(a) => a.dim,
            MapSpec::Expr(e) => e.dim,
            MapSpec::Builtin(Builtin::CircleRotation { .. }) => 1,
            MapSpec::Builtin(Builtin::Identity { dim }) => *dim,
        }
    }

    fn apply(&self, p: &Point) -> Result<Point, MapError> {
        match self {
            MapSpec::Affine(a) => Ok(a.apply(p)),
            MapSpec::Expr(e) => {
                let mut out = [0.0; 3];
                for (i, c) in e.coords.iter().enumerate() {
                    out[i] = c.eval(&p[..e.dim]).map_err(|source| MapError::Eval {
                        map: 0,
                        coordinate: i,
                        point: *p,
                        source,
                    })?;
                }
                Ok(out)
            }
            MapSpec::Builtin(Builtin::CircleRotation { r }) => {
                let x = (p[0] + r).rem_euclid(1.0);
                Ok([if x >= 1.0 { 0.0 } else { x }, 0.0, 0.0])
            }
            MapSpec::Builtin(Builtin::Identity { .. }) => Ok(*p),
        }
    }

    fn as_affine(&self) -> Option<Affine> {
        match self {
            MapSpec::Affine(a) => Some(*a),
            MapSpec::Builtin(Builtin::Identity { dim }) => Some(Affine::identity(*dim)),
            _ => None,
        }
    }

    fn exact_lipschitz(&self, metric: &Metric) -> Option<f64> {
        match (self, metric) {
            (MapSpec::Builtin(_), _) => Some(1.0),
            (_, Metric::Euclidean) => self.as_affine().map(|a| a.operator_norm()),
            _ => None,
        }
    }
}

/// A finite IFS on a box, optionally with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IFSystem {
    maps: Vec<MapSpec>,
    weights: Option<Vec<f64>>,
    domain: Bounds,
    metric: Metric,
}

impl IFSystem {
    pub fn new(maps: Vec<MapSpec>, domain: Bounds) -> Result<Self, MapKitError> {
        Self::build(maps, None, domain, Metric::Euclidean)
    }

    pub fn build(
        maps: Vec<MapSpec>,
        weights: Option<Vec<f64>>,
        domain: Bounds,
        metric: Metric,
    ) -> Result<Self, MapKitError> {
        if maps.is_empty() {
            return Err(MapKitError::InvalidIfs("at least one map is required".into()));
        }
        if !domain.is_nonempty() {
            return Err(MapKitError::InvalidIfs("domain box is empty".into()));
        }
        for (i, m) in maps.iter().enumerate() {
            if m.dim() != domain.dim {
                return Err(MapKitError::InvalidIfs(format!(
                    "map {} has dimension {} but the domain has dimension {}",
                    i + 1,
                    m.dim(),
                    domain.dim
                )));
            }
        }
        if metric == Metric::Circle && domain.dim != 1 {
            return Err(MapKitError::InvalidIfs("the circle space is one-dimensional".into()));
        }
        if let Some(w) = &weights {
            validate_weights(w, maps.len()).map_err(MapKitError::InvalidIfs)?;
        }
        Ok(Self {
            maps,
            weights,
            domain,
            metric,
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, MapKitError> {
        validate_weights(&weights, self.maps.len()).map_err(MapKitError::InvalidIfs)?;
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn maps(&self) -> &[MapSpec] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn domain(&self) -> &Bounds {
        &self.domain
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Applies map `index` (0-based) and normalizes into the space.
    pub fn apply(&self, index: usize, p: &Point) -> Result<Point, MapError> {
        self.maps[index]
            .apply(p)
            .map(|q| self.metric.normalize(q))
            .map_err(|e| e.with_map(index))
    }

    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        self.metric.dist(a, b)
    }

    /// `w_α = w_{α₁} ∘ … ∘ w_{α_k}` for 1-based symbols; the leftmost symbol
    /// is applied last.
    pub fn compose_word(&self, alpha: &[usize]) -> Result<WordMap<'_>, MapKitError> {
        compose_word(self, alpha)
    }
}

/// Weights must be strictly positive and sum to 1 within 1e-12.
pub fn validate_weights(w: &[f64], n: usize) -> Result<(), String> {
    if w.len() != n {
        return Err(format!("expected {n} weights, got {}", w.len()));
    }
    if let Some((i, v)) = w.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(format!("weight {} is not strictly positive: {v}", i + 1));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(format!("weights sum {s} (must be 1)"));
    }
    Ok(())
}

/// Composition of IFS maps along a word.
#[derive(Debug, Clone)]
pub struct WordMap<'a> {
    ifs: &'a IFSystem,
    word: Vec<usize>,
    affine: Option<Affine>,
}

impl WordMap<'_> {
    pub fn word(&self) -> &[usize] {
        &self.word
    }
}

impl PointMap for WordMap<'_> {
    fn dim(&self) -> usize {
        self.ifs.dim()
    }

    fn apply(&self, p: &Point) -> Result<Point, MapError> {
        let mut q = *p;
        for &s in self.word.iter().rev() {
            q = self.ifs.apply(s - 1, &q)?;
        }
        Ok(q)
    }

    fn as_affine(&self) -> Option<Affine> {
        self.affine
    }

    fn exact_lipschitz(&self, metric: &Metric) -> Option<f64> {
        if self
            .word
            .iter()
            .all(|&s| matches!(self.ifs.maps[s - 1], MapSpec::Builtin(_)))
        {
            return Some(1.0);
        }
        match metric {
            Metric::Euclidean => self.affine.map(|a| a.operator_norm()),
            Metric::Circle => None,
        }
    }
}

pub fn compose_word<'a>(ifs: &'a IFSystem, alpha: &[usize]) -> Result<WordMap<'a>, MapKitError> {
    let n = ifs.len();
    if let Some(&symbol) = alpha.iter().find(|&&s| s == 0 || s > n) {
        return Err(MapKitError::SymbolOutOfRange { symbol, n });
    }
    let affine = if ifs.metric == Metric::Euclidean {
        alpha.iter().try_fold(Affine::identity(ifs.dim()), |acc, &s| {
            ifs.maps[s - 1].as_affine().map(|a| acc.compose(&a))
        })
    } else {
        None
    };
    Ok(WordMap {
        ifs,
        word: alpha.to_vec(),
        affine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardResult {
    pub point: Point,
    pub iterations: usize,
    pub residual: f64,
}

/// Iterates `x ← w(x)` until `d(x, w(x)) ≤ tol`; the returned point is the
/// last `x`, so the residual bound holds for it exactly.
pub fn picard_fixed_point<M: PointMap + ?Sized>(
    map: &M,
    metric: &Metric,
    x0: Point,
    tol: f64,
    max_iter: usize,
) -> Result<PicardResult, MapKitError> {
    if !(tol > 0.0) {
        return Err(MapKitError::InvalidArgument("tol must be positive".into()));
    }
    let mut x = metric.normalize(x0);
    let mut residual = f64::INFINITY;
    for k in 0..=max_iter {
        let next = metric.normalize(map.apply(&x)?);
        residual = metric.dist(&x, &next);
        if residual <= tol {
            return Ok(PicardResult {
                point: x,
                iterations: k,
                residual,
            });
        }
        if !next.iter().all(|c| c.is_finite()) {
            break;
        }
        x = next;
    }
    Err(MapKitError::NoConvergence {
        iterations: max_iter,
        residual,
        last: x,
    })
}
