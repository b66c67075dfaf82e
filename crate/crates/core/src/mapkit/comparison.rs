use super::MapKitError;

/// A modulus of continuity `φ` with `d(w x, w y) ≤ φ(d(x, y))`.
///
/// Tables are right-continuous step functions over their knots: on
/// `[t_k, t_{k+1})` a Rakotch table uses `λ(t) = λ_k`, a tabulated one uses
/// `φ(t) = φ_k`. Below the first knot the Rakotch factor is held at `λ_0`
/// and a tabulated `φ` is interpolated linearly to `φ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonFunction {
    Banach { lambda: f64 },
    Rakotch { table: Vec<(f64, f64)> },
    Tabulated { table: Vec<(f64, f64)> },
}

fn check_knots(table: &[(f64, f64)]) -> Result<(), MapKitError> {
    if table.is_empty() {
        return Err(MapKitError::InvalidArgument("empty table".into()));
    }
    if table.iter().any(|(t, v)| !(t.is_finite() && *t > 0.0 && v.is_finite() && *v >= 0.0)) {
        return Err(MapKitError::InvalidArgument(
            "table entries must be finite with t > 0 and value ≥ 0".into(),
        ));
    }
    if table.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(MapKitError::InvalidArgument("knots must be strictly increasing".into()));
    }
    Ok(())
}

impl ComparisonFunction {
    pub fn banach(lambda: f64) -> Result<Self, MapKitError> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(MapKitError::InvalidArgument(format!(
                "Banach ratio must lie in [0,1), got {lambda}"
            )));
        }
        Ok(Self::Banach { lambda })
    }

    pub fn rakotch(table: Vec<(f64, f64)>) -> Result<Self, MapKitError> {
        check_knots(&table)?;
        if table.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(MapKitError::InvalidArgument("λ(t) must be nonincreasing".into()));
        }
        if table.iter().any(|(_, l)| *l >= 1.0) {
            return Err(MapKitError::InvalidArgument("λ(t) must be < 1 for t > 0".into()));
        }
        Ok(Self::Rakotch { table })
    }

    pub fn tabulated(table: Vec<(f64, f64)>) -> Result<Self, MapKitError> {
        check_knots(&table)?;
        if table.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(MapKitError::InvalidArgument("φ must be nondecreasing".into()));
        }
        if table.iter().any(|(t, p)| p > t) {
            return Err(MapKitError::InvalidArgument("φ(t) ≤ t is required".into()));
        }
        Ok(Self::Tabulated { table })
    }

    /// The contraction factor `φ(t)/t` as a step function (`t > 0`).
    fn factor(&self, t: f64) -> f64 {
        match self {
            Self::Banach { lambda } => *lambda,
            Self::Rakotch { table } => step_value(table, t),
            Self::Tabulated { .. } => self.eval(t) / t,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Banach { lambda } => lambda * t,
            Self::Rakotch { table } => step_value(table, t) * t,
            Self::Tabulated { table } => {
                let (t0, p0) = table[0];
                if t < t0 {
                    p0 * t / t0
                } else {
                    step_value(table, t)
                }
            }
        }
    }

    pub fn knots(&self) -> Vec<f64> {
        match self {
            Self::Banach { .. } => Vec::new(),
            Self::Rakotch { table } | Self::Tabulated { table } => {
                table.iter().map(|(t, _)| *t).collect()
            }
        }
    }

    /// `φ^k(t)`.
    pub fn iterate(&self, t: f64, k: usize) -> f64 {
        let mut v = t;
        for _ in 0..k {
            if v <= 0.0 {
                return 0.0;
            }
            v = self.eval(v);
        }
        v
    }

    /// Smallest `k ≤ k_max` with `φ^k(t) < eps`.
    pub fn decays_below(&self, t: f64, eps: f64, k_max: usize) -> Option<usize> {
        let mut v = t;
        for k in 0..=k_max {
            if v < eps {
                return Some(k);
            }
            v = self.eval(v);
        }
        None
    }
}

/// Value at the last knot `≤ t`, or the first value when `t` precedes all knots.
fn step_value(table: &[(f64, f64)], t: f64) -> f64 {
    let idx = table.partition_point(|(k, _)| *k <= t);
    table[idx.saturating_sub(1)].1
}

pub fn iterate_modulus(phi: &ComparisonFunction, t: f64, k: usize) -> f64 {
    phi.iterate(t, k)
}

/// Pointwise maximum, tabulated on the union of the members' knots.
pub fn modulus_join(phis: &[ComparisonFunction]) -> Result<ComparisonFunction, MapKitError> {
    let first = phis
        .first()
        .ok_or_else(|| MapKitError::InvalidArgument("modulus_join of an empty list".into()))?;
    if phis.len() == 1 {
        return Ok(first.clone());
    }
    if phis.iter().all(|p| matches!(p, ComparisonFunction::Banach { .. })) {
        let lambda = phis
            .iter()
            .map(|p| p.factor(1.0))
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(ComparisonFunction::Banach { lambda });
    }
    let mut knots: Vec<f64> = phis.iter().flat_map(|p| p.knots()).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    if phis.iter().any(|p| matches!(p, ComparisonFunction::Tabulated { .. })) {
        let table = knots
            .iter()
            .map(|&t| (t, phis.iter().map(|p| p.eval(t)).fold(0.0, f64::max)))
            .collect();
        Ok(ComparisonFunction::Tabulated { table })
    } else {
        let table = knots
            .iter()
            .map(|&t| (t, phis.iter().map(|p| p.factor(t)).fold(0.0, f64::max)))
            .collect();
        Ok(ComparisonFunction::Rakotch { table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banach_iteration() {
        let phi = ComparisonFunction::banach(0.5).unwrap();
        assert_eq!(iterate_modulus(&phi, 1.0, 10), 2f64.powi(-10));
        assert_eq!(iterate_modulus(&phi, 0.7, 0), 0.7);
        assert_eq!(phi.decays_below(1.0, 1e-3, 20), Some(10));
        assert_eq!(phi.decays_below(1.0, 1e-3, 5), None);
    }

    #[test]
    fn join_examples() {
        let a = ComparisonFunction::banach(0.3).unwrap();
        let b = ComparisonFunction::banach(0.5).unwrap();
        assert_eq!(modulus_join(&[a, b.clone()]).unwrap(), b);

        let r = ComparisonFunction::rakotch(vec![(1.0, 0.9)]).unwrap();
        let j = modulus_join(&[b, r.clone()]).unwrap();
        assert!((j.eval(1.0) - 0.9).abs() < 1e-15);
        assert_eq!(modulus_join(&[r.clone(), r.clone()]).unwrap(), r);
        assert!(modulus_join(&[]).is_err());
    }

    #[test]
    fn table_semantics() {
        let r = ComparisonFunction::rakotch(vec![(0.1, 0.9), (1.0, 0.5)]).unwrap();
        assert!((r.eval(0.05) - 0.045).abs() < 1e-15);
        assert!((r.eval(0.5) - 0.45).abs() < 1e-15);
        assert!((r.eval(2.0) - 1.0).abs() < 1e-15);
        assert_eq!(r.eval(0.0), 0.0);

        let t = ComparisonFunction::tabulated(vec![(0.5, 0.25), (1.0, 0.6)]).unwrap();
        assert!((t.eval(0.25) - 0.125).abs() < 1e-15);
        assert_eq!(t.eval(0.7), 0.25);
        assert_eq!(t.eval(3.0), 0.6);
    }

    #[test]
    fn invalid_tables() {
        assert!(ComparisonFunction::banach(1.0).is_err());
        assert!(ComparisonFunction::rakotch(vec![(1.0, 0.5), (2.0, 0.7)]).is_err());
        assert!(ComparisonFunction::rakotch(vec![(1.0, 1.0)]).is_err());
        assert!(ComparisonFunction::tabulated(vec![(1.0, 1.5)]).is_err());
        assert!(ComparisonFunction::tabulated(vec![(2.0, 0.1), (1.0, 0.2)]).is_err());
    }

    #[test]
    fn mixed_join_is_tabulated() {
        let b = ComparisonFunction::banach(0.5).unwrap();
        let t = ComparisonFunction::tabulated(vec![(1.0, 0.8)]).unwrap();
        let j = modulus_join(&[b, t]).unwrap();
        assert!(matches!(j, ComparisonFunction::Tabulated { .. }));
        assert_eq!(j.eval(1.0), 0.8);
    }
}
