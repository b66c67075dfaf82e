//! Points, boxes and the two ground metrics (Euclidean space and the unit
//! circle `[0,1)` with glued ends).

use rand::Rng;

/// A point in R^d for d ≤ 3. Coordinates past the working dimension are
/// kept at zero so that Euclidean distances need no dimension argument.
pub type Point = [f64; 3];

pub fn pt1(x: f64) -> Point {
    [x, 0.0, 0.0]
}

pub fn pt2(x: f64, y: f64) -> Point {
    [x, y, 0.0]
}

pub fn pt3(x: f64, y: f64, z: f64) -> Point {
    [x, y, z]
}

/// Builds a point from a coordinate slice of length 1..=3.
pub fn point_from_slice(c: &[f64]) -> Point {
    let mut p = [0.0; 3];
    p[..c.len()].copy_from_slice(c);
    p
}

/// Lexicographic total order on points.
pub fn lex_cmp(a: &Point, b: &Point) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0])
        .then(a[1].total_cmp(&b[1]))
        .then(a[2].total_cmp(&b[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// One-dimensional circle `[0,1)/{0~1}` with distance `min(|x-y|, 1-|x-y|)`.
    Circle,
}

impl Metric {
    #[inline]
    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        match self {
            Metric::Euclidean => {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                let dz = a[2] - b[2];
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
            Metric::Circle => {
                let d = (a[0] - b[0]).abs().rem_euclid(1.0);
                d.min(1.0 - d)
            }
        }
    }

    /// Brings a point back into the canonical representation of the space.
    pub fn normalize(&self, p: Point) -> Point {
        match self {
            Metric::Euclidean => p,
            Metric::Circle => {
                let x = p[0].rem_euclid(1.0);
                // rem_euclid can return 1.0 for tiny negative inputs
                [if x >= 1.0 { 0.0 } else { x }, 0.0, 0.0]
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Circle => "circle",
        }
    }
}

/// Axis-aligned box in R^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub dim: usize,
    pub lo: Point,
    pub hi: Point,
}

impl Bounds {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        assert_eq!(lo.len(), hi.len(), "bounds dimension mismatch");
        assert!((1..=3).contains(&lo.len()), "dimension must be 1, 2 or 3");
        Self {
            dim: lo.len(),
            lo: point_from_slice(lo),
            hi: point_from_slice(hi),
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(&[lo], &[hi])
    }

    pub fn is_nonempty(&self) -> bool {
        (0..self.dim).all(|i| self.lo[i] <= self.hi[i])
    }

    /// True when every used axis has positive extent.
    pub fn has_volume(&self) -> bool {
        (0..self.dim).all(|i| self.hi[i] > self.lo[i])
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; 3];
        for i in 0..self.dim {
            c[i] = 0.5 * (self.lo[i] + self.hi[i]);
        }
        c
    }

    pub fn diameter(&self, metric: &Metric) -> f64 {
        match metric {
            Metric::Euclidean => metric.dist(&self.lo, &self.hi),
            Metric::Circle => (self.hi[0] - self.lo[0]).clamp(0.0, 0.5),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    /// Box with the same center and each half-extent multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            let c = 0.5 * (self.lo[i] + self.hi[i]);
            let h = 0.5 * (self.hi[i] - self.lo[i]) * factor;
            out.lo[i] = c - h;
            out.hi[i] = c + h;
        }
        out
    }

    pub fn inflated(&self, eps: f64) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            out.lo[i] -= eps;
            out.hi[i] += eps;
        }
        out
    }

    /// Smallest box containing all points; `None` for an empty slice.
    pub fn enclosing(dim: usize, points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut b = Self {
            dim,
            lo: *first,
            hi: *first,
        };
        for p in &points[1..] {
            for i in 0..dim {
                b.lo[i] = b.lo[i].min(p[i]);
                b.hi[i] = b.hi[i].max(p[i]);
            }
        }
        Some(b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut p = [0.0; 3];
        for i in 0..self.dim {
            p[i] = if self.hi[i] > self.lo[i] {
                rng.gen_range(self.lo[i]..=self.hi[i])
            } else {
                self.lo[i]
            };
        }
        p
    }

    pub fn clamp(&self, p: &Point) -> Point {
        let mut q = *p;
        for i in 0..self.dim {
            q[i] = q[i].clamp(self.lo[i], self.hi[i]);
        }
        q
    }

    /// The 2^d corner points.
    pub fn vertices(&self) -> Vec<Point> {
        (0..1usize << self.dim)
            .map(|mask| {
                let mut p = [0.0; 3];
                for i in 0..self.dim {
                    p[i] = if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] };
                }
                p
            })
            .collect()
    }
}

/// Uniformly random unit vector in the first `dim` coordinates.
pub fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point {
    loop {
        let mut v = [0.0_f64; 3];
        for c in v.iter_mut().take(dim) {
            *c = rng.gen_range(-1.0..=1.0);
        }
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}
