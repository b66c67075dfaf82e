//! Finite words over `{1..N}`, the Baire metric, symbol drivers, and the
//! coding map of an IFS.

mod driver;

pub use driver::{Driver, DriverKind, MinorantFamily};

use std::fmt;

use thiserror::Error;

use crate::geometry::Point;
use crate::hyperspace::{HyperspaceError, PointCloud};
use crate::mapkit::{picard_fixed_point, ComparisonFunction, IFSystem, MapKitError, PointMap};

const DISJUNCTIVE_BUDGET: u64 = 1_000_000;
const WILLIAMS_BUDGET: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeSpaceError {
    #[error("symbol {symbol} outside alphabet 1..={n}")]
    Symbol { symbol: usize, n: usize },
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("word enumeration budget exceeded: {needed} > {budget}")]
    Budget { needed: u64, budget: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Picard iteration failed for word {word}: {source}")]
    Picard {
        word: Word,
        #[source]
        source: MapKitError,
    },
    #[error(transparent)]
    MapKit(#[from] MapKitError),
    #[error(transparent)]
    Hyperspace(#[from] HyperspaceError),
}

/// A finite word over the alphabet `{1..n}`; the empty word is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<usize>,
    n: usize,
}

impl Word {
    pub fn new(symbols: Vec<usize>, n: usize) -> Result<Self, CodeSpaceError> {
        if n == 0 {
            return Err(CodeSpaceError::InvalidArgument("alphabet size must be ≥ 1".into()));
        }
        if let Some(&symbol) = symbols.iter().find(|&&s| s == 0 || s > n) {
            return Err(CodeSpaceError::Symbol { symbol, n });
        }
        Ok(Self { symbols, n })
    }

    pub fn empty(n: usize) -> Self {
        Self { symbols: Vec::new(), n }
    }

    /// `(s, s, …, s)` of length `len`.
    pub fn constant(symbol: usize, len: usize, n: usize) -> Result<Self, CodeSpaceError> {
        Self::new(vec![symbol; len], n)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Result<Word, CodeSpaceError> {
        if self.n != other.n {
            return Err(CodeSpaceError::AlphabetMismatch(self.n, other.n));
        }
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Ok(Word { symbols, n: self.n })
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word {
            symbols: self.symbols[..len.min(self.len())].to_vec(),
            n: self.n,
        }
    }

    /// Parses comma-separated symbols, e.g. `1,2,2`.
    pub fn parse(text: &str, n: usize) -> Result<Self, CodeSpaceError> {
        let symbols = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| CodeSpaceError::InvalidArgument(format!("bad symbol `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(symbols, n)
    }
}

impl std::ops::Deref for Word {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.symbols
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaireDistance {
    pub value: f64,
    /// No difference within the compared length; `value` is then 0 although
    /// the infinite sequences may still differ later.
    pub prefix_equal: bool,
    pub compared: usize,
}

/// `2^{-m}` with `m` the first (1-based) index where the words differ,
/// compared over their common length.
pub fn baire_distance(a: &Word, b: &Word) -> Result<BaireDistance, CodeSpaceError> {
    if a.n != b.n {
        return Err(CodeSpaceError::AlphabetMismatch(a.n, b.n));
    }
    let compared = a.len().min(b.len());
    match (0..compared).find(|&i| a.symbols[i] != b.symbols[i]) {
        Some(i) => Ok(BaireDistance {
            value: 0.5f64.powi(i as i32 + 1),
            prefix_equal: false,
            compared,
        }),
        None => Ok(BaireDistance {
            value: 0.0,
            prefix_equal: true,
            compared,
        }),
    }
}

/// Prefix of the Champernowne sequence: all words of length 1, then all of
/// length 2 in lexicographic order, and so on, concatenated.
pub fn champernowne(n: usize, length: usize) -> Result<Word, CodeSpaceError> {
    if n == 0 {
        return Err(CodeSpaceError::InvalidArgument("alphabet size must be ≥ 1".into()));
    }
    let symbols: Vec<usize> = Driver::champernowne(n).take(length).collect();
    Ok(Word { symbols, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisjunctivityCheck {
    pub disjunctive: bool,
    /// Up to ten words of length ≤ k that never occur.
    pub missing: Vec<Word>,
}

/// Whether every word of every length `≤ k` occurs as a block of `prefix`.
pub fn is_disjunctive_upto(prefix: &Word, k: usize) -> Result<DisjunctivityCheck, CodeSpaceError> {
    if k == 0 {
        return Err(CodeSpaceError::InvalidArgument("k must be ≥ 1".into()));
    }
    let n = prefix.n as u64;
    let total = n.checked_pow(k as u32).unwrap_or(u64::MAX);
    if total > DISJUNCTIVE_BUDGET {
        return Err(CodeSpaceError::Budget {
            needed: total,
            budget: DISJUNCTIVE_BUDGET,
        });
    }
    let mut missing = Vec::new();
    for len in 1..=k {
        let count = (n as usize).pow(len as u32);
        let mut seen = vec![false; count];
        let s = prefix.symbols();
        let mut code = 0usize;
        for (i, &sym) in s.iter().enumerate() {
            code = (code * prefix.n + (sym - 1)) % count;
            if i + 1 >= len {
                seen[code] = true;
            }
        }
        for (code, _) in seen.iter().enumerate().filter(|(_, s)| !**s) {
            if missing.len() >= 10 {
                break;
            }
            let mut w = vec![0; len];
            let mut c = code;
            for slot in w.iter_mut().rev() {
                *slot = c % prefix.n + 1;
                c /= prefix.n;
            }
            missing.push(Word { symbols: w, n: prefix.n });
        }
    }
    Ok(DisjunctivityCheck {
        disjunctive: missing.is_empty(),
        missing,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinorantVerdict {
    pub family: MinorantFamily,
    /// `lim p_n^{-1}/n^c = 0` for every `c > 0`.
    pub satisfies: bool,
    /// `(c, n, p_n^{-1}/n^c)` for `c ∈ {0.5, 1, 2}`, `n ∈ {1e2, 1e4, 1e6}`.
    pub table: Vec<(f64, f64, f64)>,
}

/// Closed-form verdict on the minorant growth condition for the known
/// families: constants and inverse log powers satisfy it, inverse powers and
/// `sin(n^{-b})` do not.
pub fn minorant_verdict(family: MinorantFamily) -> MinorantVerdict {
    let satisfies = match family {
        MinorantFamily::Const(_) | MinorantFamily::LogPow(_) => true,
        MinorantFamily::Pow(_) | MinorantFamily::SinPow(_) => false,
    };
    let mut table = Vec::new();
    for c in [0.5, 1.0, 2.0] {
        for n in [1e2, 1e4, 1e6] {
            table.push((c, n, 1.0 / family.raw(n) / f64::powf(n, c)));
        }
    }
    MinorantVerdict {
        family,
        satisfies,
        table,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodedPoint {
    pub point: Point,
    /// `φ^k(diam(domain))`, bounding the distance to `π(α·β)` for any tail β.
    pub bound: Option<f64>,
}

/// `w_{α|k}(base)` for `k = |α|`.
pub fn coding_point(
    ifs: &IFSystem,
    alpha: &Word,
    base: &Point,
    phi: Option<&ComparisonFunction>,
) -> Result<CodedPoint, CodeSpaceError> {
    if alpha.is_empty() {
        return Err(CodeSpaceError::InvalidArgument("word must be nonempty".into()));
    }
    if alpha.n != ifs.len() {
        return Err(CodeSpaceError::AlphabetMismatch(alpha.n, ifs.len()));
    }
    let point = ifs.compose_word(alpha)?.apply(base).map_err(MapKitError::from)?;
    let bound = phi.map(|phi| phi.iterate(ifs.domain().diameter(ifs.metric()), alpha.len()));
    Ok(CodedPoint { point, bound })
}

/// Fixed points of `w_α` for all nonempty words with `|α| ≤ k_max`.
pub fn williams_points(ifs: &IFSystem, k_max: usize, tol: f64) -> Result<PointCloud, CodeSpaceError> {
    if k_max == 0 {
        return Err(CodeSpaceError::InvalidArgument("k_max must be ≥ 1".into()));
    }
    let n = ifs.len() as u64;
    let mut needed: u64 = 0;
    for k in 1..=k_max {
        needed = needed.saturating_add(n.checked_pow(k as u32).unwrap_or(u64::MAX));
    }
    if needed > WILLIAMS_BUDGET {
        return Err(CodeSpaceError::Budget {
            needed,
            budget: WILLIAMS_BUDGET,
        });
    }
    let start = ifs.domain().center();
    let mut points = Vec::with_capacity(needed as usize);
    for k in 1..=k_max {
        for symbols in crate::mapkit::all_words(ifs.len(), k) {
            let map = ifs.compose_word(&symbols)?;
            let fixed = picard_fixed_point(&map, ifs.metric(), start, tol, 100_000).map_err(|source| {
                CodeSpaceError::Picard {
                    word: Word {
                        symbols: symbols.clone(),
                        n: ifs.len(),
                    },
                    source,
                }
            })?;
            points.push(fixed.point);
        }
    }
    Ok(PointCloud::new(ifs.dim(), *ifs.metric(), points, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pt1, pt2, Bounds};
    use crate::mapkit::MapSpec;

    fn w(s: &[usize], n: usize) -> Word {
        Word::new(s.to_vec(), n).unwrap()
    }

    fn cantor() -> IFSystem {
        IFSystem::new(
            vec![MapSpec::scalar(1.0 / 3.0, 0.0), MapSpec::scalar(1.0 / 3.0, 2.0 / 3.0)],
            Bounds::interval(0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn baire_examples() {
        let d = baire_distance(&w(&[1, 2, 2], 2), &w(&[1, 2, 2], 2)).unwrap();
        assert_eq!((d.value, d.prefix_equal), (0.0, true));
        assert_eq!(baire_distance(&w(&[1, 1], 2), &w(&[2, 1], 2)).unwrap().value, 0.5);
        assert_eq!(baire_distance(&w(&[1, 2], 2), &w(&[1, 1], 2)).unwrap().value, 0.25);
        assert!(baire_distance(&w(&[1], 2), &w(&[1], 3)).is_err());
    }

    #[test]
    fn champernowne_examples() {
        assert_eq!(champernowne(2, 8).unwrap().symbols(), &[1, 2, 1, 1, 1, 2, 2, 1]);
        assert_eq!(champernowne(1, 3).unwrap().symbols(), &[1, 1, 1]);
        assert_eq!(champernowne(3, 3).unwrap().symbols(), &[1, 2, 3]);
        assert_eq!(champernowne(2, 0).unwrap().len(), 0);
    }

    #[test]
    fn disjunctivity_examples() {
        let periodic = Word::new((0..100).map(|i| i % 2 + 1).collect(), 2).unwrap();
        let r = is_disjunctive_upto(&periodic, 2).unwrap();
        assert!(!r.disjunctive);
        assert!(r.missing.contains(&w(&[1, 1], 2)));
        assert!(is_disjunctive_upto(&champernowne(2, 1000).unwrap(), 3).unwrap().disjunctive);
        assert!(is_disjunctive_upto(&w(&[3, 1, 2], 3), 1).unwrap().disjunctive);
        assert!(!is_disjunctive_upto(&w(&[3, 1, 3], 3), 1).unwrap().disjunctive);
        assert!(matches!(
            is_disjunctive_upto(&w(&[1], 2), 21),
            Err(CodeSpaceError::Budget { .. })
        ));
    }

    #[test]
    fn minorant_examples() {
        assert!(minorant_verdict(MinorantFamily::Const(0.3)).satisfies);
        assert!(minorant_verdict(MinorantFamily::LogPow(2.0)).satisfies);
        assert!(!minorant_verdict(MinorantFamily::Pow(1.0)).satisfies);
        assert!(!minorant_verdict(MinorantFamily::SinPow(0.5)).satisfies);
        let t = minorant_verdict(MinorantFamily::Pow(1.0)).table;
        // p_n = 1/n, c = 0.5: ratio √n grows
        assert!((t[2].2 - 1e3).abs() < 1e-6);
    }

    #[test]
    fn coding_point_examples() {
        let ifs = cantor();
        let phi = ComparisonFunction::banach(1.0 / 3.0).unwrap();
        let r = coding_point(&ifs, &Word::constant(2, 20, 2).unwrap(), &pt1(0.0), Some(&phi)).unwrap();
        assert!((r.point[0] - 1.0).abs() <= 3f64.powi(-20) + 1e-15);
        assert!((r.bound.unwrap() - 3f64.powi(-20)).abs() < 1e-24);
        let mut s = vec![1; 20];
        s[0] = 2;
        let r = coding_point(&ifs, &w(&s, 2), &pt1(0.0), None).unwrap();
        assert!((r.point[0] - 2.0 / 3.0).abs() <= 3f64.powi(-20) + 1e-15);
        assert!(r.bound.is_none());
    }

    #[test]
    fn williams_examples() {
        let c = williams_points(&cantor(), 2, 1e-12).unwrap();
        let want = [0.0, 0.25, 0.75, 1.0];
        assert_eq!(c.len(), 4);
        for (p, w) in c.points().iter().zip(want) {
            assert!((p[0] - w).abs() < 1e-11, "{p:?}");
        }
        let half = IFSystem::new(vec![MapSpec::scalar(0.5, 0.0)], Bounds::interval(-1.0, 1.0)).unwrap();
        for k in 1..4 {
            let c = williams_points(&half, k, 1e-12).unwrap();
            assert_eq!(c.len(), 1);
            assert!(c.points()[0][0].abs() < 1e-11);
        }
        let corners = [pt2(0.0, 0.0), pt2(1.0, 0.0), pt2(0.5, 1.0)];
        let maps = corners
            .iter()
            .map(|c| MapSpec::affine(&[0.5, 0.0, 0.0, 0.5], &[c[0] / 2.0, c[1] / 2.0]).unwrap())
            .collect();
        let sierpinski = IFSystem::new(maps, Bounds::new(&[0.0, 0.0], &[1.0, 1.0])).unwrap();
        let c = williams_points(&sierpinski, 1, 1e-12).unwrap();
        assert_eq!(c.len(), 3);
        for corner in corners {
            assert!(c.points().iter().any(|p| crate::Metric::Euclidean.dist(p, &corner) < 1e-11));
        }
    }

    #[test]
    fn williams_reports_non_contractive_words() {
        let ifs = IFSystem::new(vec![MapSpec::scalar(2.0, 0.1)], Bounds::interval(-1.0, 1.0)).unwrap();
        match williams_points(&ifs, 1, 1e-9) {
            Err(CodeSpaceError::Picard { word, .. }) => assert_eq!(word.symbols(), &[1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn word_display_and_parse() {
        let a = Word::parse("1, 2,2", 2).unwrap();
        assert_eq!(a.to_string(), "1,2,2");
        assert!(Word::parse("1,3", 2).is_err());
    }
}
