#![allow(dead_code)]

use ifslab_core::geometry::{pt1, pt2, Bounds, Metric, Point};
use ifslab_core::hyperspace::PointCloud;
use ifslab_core::mapkit::{IFSystem, MapSpec};

pub const CORNERS: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]];

pub fn cantor() -> IFSystem {
    IFSystem::new(
        vec![MapSpec::scalar(1.0 / 3.0, 0.0), MapSpec::scalar(1.0 / 3.0, 2.0 / 3.0)],
        Bounds::interval(0.0, 1.0),
    )
    .unwrap()
}

pub fn cantor_weighted() -> IFSystem {
    cantor().with_weights(vec![0.5, 0.5]).unwrap()
}

pub fn sierpinski() -> IFSystem {
    let maps = CORNERS
        .iter()
        .map(|c| MapSpec::affine(&[0.5, 0.0, 0.0, 0.5], &[c[0] / 2.0, c[1] / 2.0]).unwrap())
        .collect();
    IFSystem::new(maps, Bounds::new(&[0.0, 0.0], &[1.0, 1.0])).unwrap()
}

/// `{x/2, 2x}` on `[-1, 1]`.
pub fn semiattractor() -> IFSystem {
    IFSystem::new(
        vec![MapSpec::scalar(0.5, 0.0), MapSpec::scalar(2.0, 0.0)],
        Bounds::interval(-1.0, 1.0),
    )
    .unwrap()
}

/// `{max(1/2, 1-x), min(1/2, 1-x)}` on `[0, 1]`.
pub fn tarafdar() -> IFSystem {
    IFSystem::new(
        vec![
            MapSpec::expr(&["max(0.5, 1-x)"]).unwrap(),
            MapSpec::expr(&["min(0.5, 1-x)"]).unwrap(),
        ],
        Bounds::interval(0.0, 1.0),
    )
    .unwrap()
}

/// `{2 sin x, sin(x)/2}` on `[0, π/2]`.
pub fn sin_average() -> IFSystem {
    IFSystem::new(
        vec![
            MapSpec::expr(&["2*sin(x)"]).unwrap(),
            MapSpec::expr(&["0.5*sin(x)"]).unwrap(),
        ],
        Bounds::interval(0.0, std::f64::consts::FRAC_PI_2),
    )
    .unwrap()
}

pub fn circle_rotation(r: f64) -> IFSystem {
    IFSystem::build(
        vec![
            MapSpec::circle_rotation(r),
            MapSpec::Builtin(ifslab_core::mapkit::Builtin::Identity { dim: 1 }),
        ],
        Some(vec![0.5, 0.5]),
        Bounds::interval(0.0, 1.0),
        Metric::Circle,
    )
    .unwrap()
}

/// Cantor points `Σ_{i≤k} 2 d_i 3^{-i}` for all digit strings, computed
/// directly from the ternary expansion.
pub fn cantor_reference(depth: u32) -> PointCloud {
    let n = 1usize << depth;
    let pts = (0..n)
        .map(|bits| {
            let mut x = 0.0;
            let mut scale = 1.0;
            for i in 0..depth {
                scale /= 3.0;
                if bits >> (depth - 1 - i) & 1 == 1 {
                    x += 2.0 * scale;
                }
            }
            pt1(x)
        })
        .collect();
    PointCloud::euclidean(1, pts).unwrap()
}

/// Sierpinski points `Σ_{i≤k} c_{α_i} 2^{-i}` for all `3^k` words.
pub fn sierpinski_reference(depth: u32) -> PointCloud {
    let mut level = vec![[0.0_f64, 0.0]];
    let mut scale = 1.0;
    for _ in 0..depth {
        scale /= 2.0;
        let mut next = Vec::with_capacity(level.len() * 3);
        for p in &level {
            for c in CORNERS {
                next.push([p[0] + scale * c[0], p[1] + scale * c[1]]);
            }
        }
        level = next;
    }
    PointCloud::euclidean(2, level.into_iter().map(|p| pt2(p[0], p[1])).collect()).unwrap()
}

/// Plain double loop `max_a min_b d(a, b)`.
pub fn brute_excess(a: &[Point], b: &[Point], metric: Metric) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| metric.dist(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn brute_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
    let m = *a.metric();
    brute_excess(a.points(), b.points(), m).max(brute_excess(b.points(), a.points(), m))
}
