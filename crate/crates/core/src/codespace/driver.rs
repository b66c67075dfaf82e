//! Unbounded symbol sources over `{1..N}`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CodeSpaceError, Word};

/// Probability families `p_n` for the minorant-driven process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinorantFamily {
    Const(f64),
    /// `p_n = (ln n)^{-b}`
    LogPow(f64),
    /// `p_n = n^{-b}`
    Pow(f64),
    /// `p_n = sin(n^{-b})`
    SinPow(f64),
}

impl MinorantFamily {
    /// Unclamped `p_n` (infinite where the formula blows up).
    pub fn raw(&self, n: f64) -> f64 {
        match *self {
            MinorantFamily::Const(p) => p,
            MinorantFamily::LogPow(b) => n.ln().powf(-b),
            MinorantFamily::Pow(b) => n.powf(-b),
            MinorantFamily::SinPow(b) => n.powf(-b).sin(),
        }
    }

    /// `p_n` clamped to `[0, 1/N]`.
    pub fn prob(&self, n: u64, alphabet: usize) -> f64 {
        let r = self.raw(n as f64);
        let cap = 1.0 / alphabet as f64;
        if r.is_nan() || r > cap {
            cap
        } else {
            r.max(0.0)
        }
    }

    pub fn name(&self) -> String {
        match self {
            MinorantFamily::Const(p) => format!("const({p})"),
            MinorantFamily::LogPow(b) => format!("logpow({b})"),
            MinorantFamily::Pow(b) => format!("pow({b})"),
            MinorantFamily::SinPow(b) => format!("sinpow({b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriverKind {
    Champernowne,
    Periodic(Word),
    /// The prefix, then the prefix again, forever.
    Explicit(Word),
    Bernoulli { weights: Vec<f64>, seed: u64 },
    /// Row `i` is the distribution of the next symbol after symbol `i + 1`.
    MarkovChain { rows: Vec<Vec<f64>>, seed: u64 },
    Minorant { family: MinorantFamily, seed: u64 },
}

#[derive(Debug, Clone)]
enum State {
    Champernowne { digits: Vec<usize>, pos: usize },
    Cycle { pos: usize },
    Bernoulli { rng: ChaCha8Rng, dist: WeightedIndex<f64> },
    Markov { rng: ChaCha8Rng, rows: Vec<WeightedIndex<f64>>, prev: usize },
    Minorant { rng: ChaCha8Rng, n: u64, prev: usize },
}

/// Stateful symbol stream; every kind is infinite.
#[derive(Debug, Clone)]
pub struct Driver {
    kind: DriverKind,
    n: usize,
    state: State,
}

fn weighted(w: &[f64], what: &str) -> Result<WeightedIndex<f64>, CodeSpaceError> {
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(CodeSpaceError::InvalidArgument(format!("{what}: negative or non-finite weight")));
    }
    WeightedIndex::new(w).map_err(|e| CodeSpaceError::InvalidArgument(format!("{what}: {e}")))
}

impl Driver {
    pub fn new(kind: DriverKind, n: usize) -> Result<Self, CodeSpaceError> {
        if n == 0 {
            return Err(CodeSpaceError::InvalidArgument("alphabet size must be ≥ 1".into()));
        }
        let state = match &kind {
            DriverKind::Champernowne => State::Champernowne {
                digits: vec![1],
                pos: 0,
            },
            DriverKind::Periodic(w) | DriverKind::Explicit(w) => {
                if w.is_empty() {
                    return Err(CodeSpaceError::InvalidArgument("empty pattern".into()));
                }
                if w.alphabet() != n {
                    return Err(CodeSpaceError::AlphabetMismatch(w.alphabet(), n));
                }
                State::Cycle { pos: 0 }
            }
            DriverKind::Bernoulli { weights, seed } => {
                if weights.len() != n {
                    return Err(CodeSpaceError::InvalidArgument(format!(
                        "{} weights for alphabet {n}",
                        weights.len()
                    )));
                }
                State::Bernoulli {
                    rng: ChaCha8Rng::seed_from_u64(*seed),
                    dist: weighted(weights, "bernoulli")?,
                }
            }
            DriverKind::MarkovChain { rows, seed } => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(CodeSpaceError::InvalidArgument(format!(
                        "transition matrix must be {n}x{n}"
                    )));
                }
                State::Markov {
                    rng: ChaCha8Rng::seed_from_u64(*seed),
                    rows: rows
                        .iter()
                        .enumerate()
                        .map(|(i, r)| weighted(r, &format!("row {}", i + 1)))
                        .collect::<Result<_, _>>()?,
                    prev: 0,
                }
            }
            DriverKind::Minorant { family, .. } => {
                if let MinorantFamily::Const(p) = family {
                    if !(*p > 0.0 && *p <= 1.0) {
                        return Err(CodeSpaceError::InvalidArgument(format!(
                            "const probability {p} outside (0, 1]"
                        )));
                    }
                }
                let seed = match kind {
                    DriverKind::Minorant { seed, .. } => seed,
                    _ => unreachable!(),
                };
                State::Minorant {
                    rng: ChaCha8Rng::seed_from_u64(seed),
                    n: 0,
                    prev: 1,
                }
            }
        };
        Ok(Self { kind, n, state })
    }

    /// Concatenation of all words of length 1, 2, 3, … in lexicographic order.
    pub fn champernowne(n: usize) -> Self {
        Self::new(DriverKind::Champernowne, n).expect("valid alphabet")
    }

    pub fn periodic(pattern: Word) -> Result<Self, CodeSpaceError> {
        let n = pattern.alphabet();
        Self::new(DriverKind::Periodic(pattern), n)
    }

    pub fn kind(&self) -> &DriverKind {
        &self.kind
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    /// Fresh driver of the same kind; random kinds take the new seed.
    pub fn reseeded(&self, seed: u64) -> Self {
        let kind = match &self.kind {
            DriverKind::Bernoulli { weights, .. } => DriverKind::Bernoulli {
                weights: weights.clone(),
                seed,
            },
            DriverKind::MarkovChain { rows, .. } => DriverKind::MarkovChain {
                rows: rows.clone(),
                seed,
            },
            DriverKind::Minorant { family, .. } => DriverKind::Minorant {
                family: *family,
                seed,
            },
            k => k.clone(),
        };
        Self::new(kind, self.n).expect("kind already validated")
    }

    /// The next `len` symbols as a word.
    pub fn take_word(&mut self, len: usize) -> Word {
        let symbols: Vec<usize> = self.by_ref().take(len).collect();
        Word::new(symbols, self.n).expect("driver symbols are in range")
    }
}

impl Iterator for Driver {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let n = self.n;
        let sym = match &mut self.state {
            State::Champernowne { digits, pos } => {
                let s = digits[*pos];
                *pos += 1;
                if *pos == digits.len() {
                    *pos = 0;
                    // advance to the lexicographic successor, or the first longer word
                    let mut i = digits.len();
                    loop {
                        if i == 0 {
                            *digits = vec![1; digits.len() + 1];
                            break;
                        }
                        i -= 1;
                        if digits[i] < n {
                            digits[i] += 1;
                            digits[i + 1..].iter_mut().for_each(|d| *d = 1);
                            break;
                        }
                    }
                }
                s
            }
            State::Cycle { pos } => {
                let w = match &self.kind {
                    DriverKind::Periodic(w) | DriverKind::Explicit(w) => w,
                    _ => unreachable!(),
                };
                let s = w[*pos];
                *pos = (*pos + 1) % w.len();
                s
            }
            State::Bernoulli { rng, dist } => dist.sample(rng) + 1,
            State::Markov { rng, rows, prev } => {
                let s = rows[*prev].sample(rng);
                *prev = s;
                s + 1
            }
            State::Minorant { rng, n: step, prev } => {
                *step += 1;
                let family = match &self.kind {
                    DriverKind::Minorant { family, .. } => *family,
                    _ => unreachable!(),
                };
                let fresh = (n as f64 * family.prob(*step, n)).min(1.0);
                if rng.gen::<f64>() < fresh {
                    *prev = rng.gen_range(1..=n);
                }
                *prev
            }
        };
        Some(sym)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn champernowne_binary_start() {
        let s: Vec<usize> = Driver::champernowne(2).take(10).collect();
        assert_eq!(s, vec![1, 2, 1, 1, 1, 2, 2, 1, 2, 2]);
    }

    #[test]
    fn periodic_cycles() {
        let d = Driver::periodic(Word::parse("1,2,3", 3).unwrap()).unwrap();
        let s: Vec<usize> = d.take(7).collect();
        assert_eq!(s, vec![1, 2, 3, 1, 2, 3, 1]);
    }

    #[test]
    fn seeded_streams_repeat() {
        let d = Driver::new(
            DriverKind::Bernoulli {
                weights: vec![0.5, 0.5],
                seed: 9,
            },
            2,
        )
        .unwrap();
        let a: Vec<usize> = d.clone().take(100).collect();
        let b: Vec<usize> = d.reseeded(9).take(100).collect();
        assert_eq!(a, b);
        let c: Vec<usize> = d.reseeded(10).take(100).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn absorbing_chain_stops_emitting() {
        let d = Driver::new(
            DriverKind::MarkovChain {
                rows: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
                seed: 1,
            },
            2,
        )
        .unwrap();
        assert!(d.take(1000).all(|s| s == 1));
    }

    #[test]
    fn minorant_probabilities_are_capped() {
        assert_eq!(MinorantFamily::LogPow(2.0).prob(1, 2), 0.5);
        assert!((MinorantFamily::Pow(1.0).prob(100, 2) - 0.01).abs() < 1e-15);
        let d = Driver::new(
            DriverKind::Minorant {
                family: MinorantFamily::Const(0.5),
                seed: 3,
            },
            2,
        )
        .unwrap();
        let s: Vec<usize> = d.take(1000).collect();
        assert!(s.contains(&1) && s.contains(&2));
    }
}
