//! Uniform hash grid for exact nearest-neighbour distances and ε-pruning.
//! Candidate distances are computed with the same metric call as the brute
//! force path, so minima agree bit for bit.

use std::collections::HashMap;

use crate::geometry::{Metric, Point};

type Key = [i64; 3];

const MAX_EXTRA_RINGS: i64 = 16;

pub(crate) struct SpatialGrid {
    metric: Metric,
    dim: usize,
    origin: Point,
    h: f64,
    /// Number of cells around the circle, for the circle metric.
    wrap: Option<i64>,
    cells: HashMap<Key, Vec<usize>>,
    lo: Key,
    hi: Key,
}

impl SpatialGrid {
    pub fn new(metric: Metric, dim: usize, origin: Point, cell: f64) -> Self {
        let (h, wrap) = match metric {
            Metric::Circle => {
                let m = ((1.0 / cell).floor() as i64).max(1);
                (1.0 / m as f64, Some(m))
            }
            Metric::Euclidean => (cell, None),
        };
        Self {
            metric,
            dim,
            origin,
            h,
            wrap,
            cells: HashMap::new(),
            lo: [i64::MAX; 3],
            hi: [i64::MIN; 3],
        }
    }

    /// Grid sized for roughly one point per cell over `points`.
    pub fn build(metric: Metric, dim: usize, points: &[Point]) -> Option<Self> {
        let bbox = crate::geometry::Bounds::enclosing(dim, points)?;
        let extent = (0..dim)
            .map(|i| bbox.hi[i] - bbox.lo[i])
            .fold(0.0_f64, f64::max);
        if !(extent > 0.0) || !extent.is_finite() {
            return None;
        }
        let cell = extent / (points.len() as f64).powf(1.0 / dim as f64).max(1.0);
        let mut g = Self::new(metric, dim, bbox.lo, cell);
        for (i, p) in points.iter().enumerate() {
            g.insert(i, p);
        }
        Some(g)
    }

    pub fn key(&self, p: &Point) -> Key {
        let mut k = [0i64; 3];
        match self.wrap {
            Some(m) => k[0] = ((p[0] * m as f64).floor() as i64).rem_euclid(m),
            None => {
                for i in 0..self.dim {
                    let v = ((p[i] - self.origin[i]) / self.h).floor();
                    k[i] = v.clamp(-1e15, 1e15) as i64;
                }
            }
        }
        k
    }

    pub fn insert(&mut self, idx: usize, p: &Point) {
        let k = self.key(p);
        for i in 0..3 {
            self.lo[i] = self.lo[i].min(k[i]);
            self.hi[i] = self.hi[i].max(k[i]);
        }
        self.cells.entry(k).or_default().push(idx);
    }

    /// Calls `f` on every index stored in cells at Chebyshev distance exactly `r`.
    fn visit_ring(&self, center: &Key, r: i64, f: &mut impl FnMut(usize)) {
        if let Some(m) = self.wrap {
            if 2 * r > m {
                return;
            }
            let a = (center[0] - r).rem_euclid(m);
            let b = (center[0] + r).rem_euclid(m);
            self.visit_cell(&[a, 0, 0], f);
            if b != a {
                self.visit_cell(&[b, 0, 0], f);
            }
            return;
        }
        // offsets restricted to the occupied key range
        let span = |i: usize| {
            if i < self.dim {
                (-r).max(self.lo[i].saturating_sub(center[i]))..=r.min(self.hi[i].saturating_sub(center[i]))
            } else {
                0..=0
            }
        };
        for dx in span(0) {
            for dy in span(1) {
                for dz in span(2) {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                        continue;
                    }
                    self.visit_cell(&[center[0] + dx, center[1] + dy, center[2] + dz], f);
                }
            }
        }
    }

    fn visit_cell(&self, k: &Key, f: &mut impl FnMut(usize)) {
        if let Some(v) = self.cells.get(k) {
            v.iter().for_each(|&i| f(i));
        }
    }

    /// Chebyshev cell distance from `k` to the occupied key range.
    fn rings_to_occupied(&self, k: &Key) -> i64 {
        if self.wrap.is_some() {
            return 0;
        }
        (0..self.dim)
            .map(|i| self.lo[i].saturating_sub(k[i]).max(k[i].saturating_sub(self.hi[i])).max(0))
            .max()
            .unwrap_or(0)
    }

    fn max_ring(&self) -> i64 {
        match self.wrap {
            Some(m) => m / 2,
            None => (0..self.dim)
                .map(|i| self.hi[i] - self.lo[i])
                .max()
                .unwrap_or(0),
        }
    }

    /// Exact `min_{p ∈ points} d(q, p)` over the indexed points.
    pub fn nearest(&self, q: &Point, points: &[Point]) -> f64 {
        let center = self.key(q);
        let start = self.rings_to_occupied(&center);
        let last = start + self.max_ring() + 1;
        let mut best = f64::INFINITY;
        let mut r = start;
        while r <= last {
            if r > start + MAX_EXTRA_RINGS {
                return points
                    .iter()
                    .map(|p| self.metric.dist(q, p))
                    .fold(f64::INFINITY, f64::min);
            }
            self.visit_ring(&center, r, &mut |i| {
                best = best.min(self.metric.dist(q, &points[i]));
            });
            // unseen points lie in rings ≥ r+1, hence farther than r·h
            if best < r as f64 * self.h * (1.0 - 1e-9) {
                break;
            }
            r += 1;
        }
        best
    }

    /// True when some indexed point lies strictly closer than `radius`
    /// (`radius ≤ h` is required).
    pub fn any_within(&self, q: &Point, points: &[Point], radius: f64) -> bool {
        let center = self.key(q);
        let mut found = false;
        for r in 0..=1 {
            self.visit_ring(&center, r, &mut |i| {
                if !found && self.metric.dist(q, &points[i]) < radius {
                    found = true;
                }
            });
        }
        found
    }
}
