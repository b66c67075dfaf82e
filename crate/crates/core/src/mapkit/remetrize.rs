use super::{ComparisonFunction, IFSystem, MapKitError};
use crate::geometry::Point;

const WORD_BUDGET: u64 = 1_000_000;

/// `a_k = 2 − 1/(k+1)` for `k = 0..=depth`.
pub fn default_remetrization_weights(depth: usize) -> Vec<f64> {
    (0..=depth).map(|k| 2.0 - 1.0 / (k as f64 + 1.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Remetrized {
    pub value: f64,
    /// `2·φ^K(diam)` when a modulus was supplied.
    pub tail_bound: Option<f64>,
}

/// `max_{k ≤ K} max_{|α| = k} a_k · d(w_α x, w_α y)` with `K = a_seq.len() − 1`.
pub fn remetrized_distance(
    ifs: &IFSystem,
    a_seq: &[f64],
    x: &Point,
    y: &Point,
    phi: Option<&ComparisonFunction>,
) -> Result<Remetrized, MapKitError> {
    let Some(depth) = a_seq.len().checked_sub(1) else {
        return Err(MapKitError::InvalidArgument("a_seq must be nonempty".into()));
    };
    if a_seq.iter().any(|a| !(1.0..=2.0).contains(a)) {
        return Err(MapKitError::InvalidArgument("a_k must lie in [1, 2]".into()));
    }
    if a_seq.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MapKitError::InvalidArgument("a_seq must be strictly increasing".into()));
    }
    let n = ifs.len() as u64;
    let mut needed: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..=depth {
        needed = needed.saturating_add(level);
        level = level.saturating_mul(n);
    }
    if needed > WORD_BUDGET {
        return Err(MapKitError::Budget {
            needed,
            budget: WORD_BUDGET,
        });
    }

    let mut pairs = vec![(*x, *y)];
    let mut value = a_seq[0] * ifs.dist(x, y);
    for a_k in &a_seq[1..] {
        let mut next = Vec::with_capacity(pairs.len() * ifs.len());
        for (p, q) in &pairs {
            for i in 0..ifs.len() {
                let (wp, wq) = (ifs.apply(i, p)?, ifs.apply(i, q)?);
                value = value.max(a_k * ifs.dist(&wp, &wq));
                next.push((wp, wq));
            }
        }
        pairs = next;
    }
    let tail_bound = phi.map(|phi| 2.0 * phi.iterate(ifs.domain().diameter(ifs.metric()), depth));
    Ok(Remetrized { value, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pt1, Bounds};
    use crate::mapkit::MapSpec;

    fn cantor() -> IFSystem {
        IFSystem::new(
            vec![MapSpec::scalar(1.0 / 3.0, 0.0), MapSpec::scalar(1.0 / 3.0, 2.0 / 3.0)],
            Bounds::interval(0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn cantor_endpoints() {
        let a = default_remetrization_weights(5);
        let phi = ComparisonFunction::banach(1.0 / 3.0).unwrap();
        let r = remetrized_distance(&cantor(), &a, &pt1(0.0), &pt1(1.0), Some(&phi)).unwrap();
        assert_eq!(r.value, 1.0);
        assert!((r.tail_bound.unwrap() - 2.0 * 3f64.powi(-5)).abs() < 1e-15);
        let r = remetrized_distance(&cantor(), &a, &pt1(0.4), &pt1(0.4), None).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn rejects_bad_sequences_and_budget() {
        let ifs = cantor();
        assert!(remetrized_distance(&ifs, &[1.0, 1.0], &pt1(0.0), &pt1(1.0), None).is_err());
        assert!(remetrized_distance(&ifs, &[1.0, 2.5], &pt1(0.0), &pt1(1.0), None).is_err());
        let deep: Vec<f64> = (0..=20).map(|k| 1.0 + k as f64 / 21.0).collect();
        assert!(matches!(
            remetrized_distance(&ifs, &deep, &pt1(0.0), &pt1(1.0), None),
            Err(MapKitError::Budget { .. })
        ));
    }
}
