//! Nearest-pair agglomeration of weighted atoms.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::geometry::{lex_cmp, Metric, Point};

type Key = [i64; 3];

/// Weight barycenter; on the circle `b` is first unwrapped next to `a`.
pub(crate) fn barycenter(metric: &Metric, a: &Point, wa: f64, b: &Point, wb: f64) -> Point {
    let t = wb / (wa + wb);
    match metric {
        Metric::Euclidean => std::array::from_fn(|i| a[i] + t * (b[i] - a[i])),
        Metric::Circle => {
            let mut d = (b[0] - a[0]).rem_euclid(1.0);
            if d > 0.5 {
                d -= 1.0;
            }
            metric.normalize([a[0] + t * d, 0.0, 0.0])
        }
    }
}

/// Sorts atoms lexicographically and sums the weights of identical points.
pub(crate) fn merge_exact(metric: &Metric, mut atoms: Vec<(Point, f64)>) -> Vec<(Point, f64)> {
    atoms.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let mut out: Vec<(Point, f64)> = Vec::with_capacity(atoms.len());
    for (p, w) in atoms {
        match out.last_mut() {
            Some(last) if metric.dist(&last.0, &p) == 0.0 => last.1 += w,
            _ => out.push((p, w)),
        }
    }
    out
}

#[derive(PartialEq)]
struct Candidate {
    d: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    // reversed for a min-heap; ties go to the lowest indices
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .d
            .total_cmp(&self.d)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Grid {
    metric: Metric,
    dim: usize,
    h: f64,
    wrap: Option<i64>,
    cells: HashMap<Key, Vec<usize>>,
}

impl Grid {
    fn key(&self, p: &Point) -> Key {
        let mut k = [0; 3];
        match self.wrap {
            Some(m) => k[0] = ((p[0] * m as f64).floor() as i64).rem_euclid(m),
            None => {
                for i in 0..self.dim {
                    k[i] = (p[i] / self.h).floor().clamp(-1e15, 1e15) as i64;
                }
            }
        }
        k
    }

    fn neighbours(&self, k: &Key) -> Vec<Key> {
        let r = |i: usize| if i < self.dim { -1..=1 } else { 0..=0 };
        let mut out = Vec::with_capacity(27);
        for dx in r(0) {
            for dy in r(1) {
                for dz in r(2) {
                    let mut c = [k[0] + dx, k[1] + dy, k[2] + dz];
                    if let Some(m) = self.wrap {
                        c[0] = c[0].rem_euclid(m);
                    }
                    if !out.contains(&c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

/// Merges the closest pair (at its weight barycenter) while some pair is
/// closer than `radius`. Returns the atoms in lexicographic order and the
/// total transport cost of all merges, which bounds the d_MK change.
pub(crate) fn agglomerate(
    metric: Metric,
    dim: usize,
    atoms: Vec<(Point, f64)>,
    radius: f64,
) -> (Vec<(Point, f64)>, f64) {
    let atoms = merge_exact(&metric, atoms);
    if radius <= 0.0 || atoms.len() < 2 {
        return (atoms, 0.0);
    }
    let wrap = match metric {
        Metric::Circle => {
            let m = (1.0 / radius).floor() as i64;
            // fewer than three cells: every cell neighbours every other
            Some(m.max(1))
        }
        Metric::Euclidean => None,
    };
    let h = match wrap {
        Some(m) => 1.0 / m as f64,
        None => radius,
    };
    let mut grid = Grid {
        metric,
        dim,
        h,
        wrap,
        cells: HashMap::new(),
    };
    let mut pts: Vec<Point> = Vec::with_capacity(atoms.len() * 2);
    let mut wts: Vec<f64> = Vec::with_capacity(atoms.len() * 2);
    let mut alive: Vec<bool> = Vec::with_capacity(atoms.len() * 2);
    for (p, w) in atoms {
        grid.cells.entry(grid.key(&p)).or_default().push(pts.len());
        pts.push(p);
        wts.push(w);
        alive.push(true);
    }

    let nearest = |grid: &Grid, pts: &[Point], alive: &[bool], a: usize| -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        for k in grid.neighbours(&grid.key(&pts[a])) {
            if let Some(ids) = grid.cells.get(&k) {
                for &b in ids {
                    if b == a || !alive[b] {
                        continue;
                    }
                    let d = grid.metric.dist(&pts[a], &pts[b]);
                    let c = Candidate {
                        d,
                        a: a.min(b),
                        b: a.max(b),
                    };
                    if d < radius && best.as_ref().is_none_or(|x| c > *x) {
                        best = Some(c);
                    }
                }
            }
        }
        best
    };

    let mut heap = BinaryHeap::new();
    for a in 0..pts.len() {
        if let Some(c) = nearest(&grid, &pts, &alive, a) {
            heap.push(c);
        }
    }
    let mut cost = 0.0;
    while let Some(c) = heap.pop() {
        match (alive[c.a], alive[c.b]) {
            (true, true) => {}
            (true, false) | (false, true) => {
                let s = if alive[c.a] { c.a } else { c.b };
                if let Some(n) = nearest(&grid, &pts, &alive, s) {
                    heap.push(n);
                }
                continue;
            }
            (false, false) => continue,
        }
        let (wa, wb) = (wts[c.a], wts[c.b]);
        let p = barycenter(&metric, &pts[c.a], wa, &pts[c.b], wb);
        cost += wa * metric.dist(&pts[c.a], &p) + wb * metric.dist(&pts[c.b], &p);
        for x in [c.a, c.b] {
            alive[x] = false;
            let k = grid.key(&pts[x]);
            if let Some(v) = grid.cells.get_mut(&k) {
                v.retain(|&y| y != x);
            }
        }
        let id = pts.len();
        grid.cells.entry(grid.key(&p)).or_default().push(id);
        pts.push(p);
        wts.push(wa + wb);
        alive.push(true);
        if let Some(n) = nearest(&grid, &pts, &alive, id) {
            heap.push(n);
        }
    }
    let out: Vec<(Point, f64)> = (0..pts.len())
        .filter(|&i| alive[i])
        .map(|i| (pts[i], wts[i]))
        .collect();
    (merge_exact(&metric, out), cost)
}
