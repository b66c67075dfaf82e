//! Chaos-game orbits, ω-limit estimates, and comparison against attractor
//! references.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codespace::{is_disjunctive_upto, CodeSpaceError, Driver, Word};
use crate::geometry::{Metric, Point};
use crate::hyperspace::{excess, HyperspaceError, PointCloud};
use crate::mapkit::{IFSystem, MapError};

/// Orbits whose Euclidean norm exceeds this abort as unbounded.
pub const ESCAPE_RADIUS: f64 = 1e12;
/// Radii reported in [`TailStats::beyond`].
pub const TAIL_RADII: [f64; 7] = [0.5, 1.0, 2.0, 10.0, 100.0, 1e3, 1e6];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChaosError {
    #[error("invalid orbit configuration: {0}")]
    InvalidConfig(String),
    #[error("orbit unbounded: |x_{index}| exceeds {ESCAPE_RADIUS:e} at {point:?}")]
    Escape { index: usize, point: Point },
    #[error("empty tail: no recorded index beyond burn-in {burn_in}")]
    EmptyTail { burn_in: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Hyperspace(#[from] HyperspaceError),
    #[error(transparent)]
    CodeSpace(#[from] CodeSpaceError),
}

pub fn default_burn_in(n: usize) -> usize {
    (n / 100).max(1000)
}

#[derive(Debug, Clone)]
pub struct OrbitConfig {
    pub x0: Point,
    pub driver: Driver,
    /// Number of map applications.
    pub n: usize,
    pub burn_in: usize,
    pub stride: usize,
}

impl OrbitConfig {
    /// Stride 1 and the default burn-in, capped below `n`.
    pub fn new(x0: Point, driver: Driver, n: usize) -> Self {
        let burn_in = default_burn_in(n).min(n.saturating_sub(1));
        Self {
            x0,
            driver,
            n,
            burn_in,
            stride: 1,
        }
    }

    pub fn with_burn_in(mut self, m: usize) -> Self {
        self.burn_in = m;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    fn validate(&self, ifs: &IFSystem) -> Result<(), ChaosError> {
        if self.stride == 0 {
            return Err(ChaosError::InvalidConfig("stride must be ≥ 1".into()));
        }
        if self.burn_in >= self.n {
            return Err(ChaosError::InvalidConfig(format!(
                "burn-in {} must be below n = {}",
                self.burn_in, self.n
            )));
        }
        if self.driver.alphabet() != ifs.len() {
            return Err(ChaosError::InvalidConfig(format!(
                "driver alphabet {} does not match {} maps",
                self.driver.alphabet(),
                ifs.len()
            )));
        }
        let room = ifs.domain().inflated(1.0).scaled(crate::hyperspace::ESCAPE_FACTOR);
        if matches!(ifs.metric(), Metric::Euclidean) && !room.contains(&self.x0) {
            return Err(ChaosError::InvalidConfig(format!(
                "x0 {:?} lies far outside the domain",
                &self.x0[..ifs.dim()]
            )));
        }
        Ok(())
    }
}

/// Strided record of `x_0, x_1, …, x_n` with the symbols that drove it.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub dim: usize,
    pub metric: Metric,
    /// Orbit index of each recorded point.
    pub indices: Vec<usize>,
    pub points: Vec<Point>,
    /// `σ_1, …, σ_n` (1-based).
    pub symbols: Vec<usize>,
}

impl Orbit {
    pub fn last(&self) -> &Point {
        self.points.last().expect("x0 is always recorded")
    }

    pub fn word(&self, n: usize) -> Word {
        Word::new(self.symbols.clone(), n).expect("driver symbols are in range")
    }
}

fn norm(p: &Point) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `x_k = w_{σ_k}(x_{k-1})`, so `x_n = w_{σ_n} ∘ … ∘ w_{σ_1}(x_0)`.
/// Indices divisible by the stride (and the final index) are recorded.
pub fn run_orbit(ifs: &IFSystem, cfg: &OrbitConfig) -> Result<Orbit, ChaosError> {
    cfg.validate(ifs)?;
    let mut driver = cfg.driver.clone();
    let cap = cfg.n / cfg.stride + 2;
    let mut orbit = Orbit {
        dim: ifs.dim(),
        metric: *ifs.metric(),
        indices: Vec::with_capacity(cap),
        points: Vec::with_capacity(cap),
        symbols: Vec::with_capacity(cfg.n),
    };
    let mut x = ifs.metric().normalize(cfg.x0);
    orbit.indices.push(0);
    orbit.points.push(x);
    for k in 1..=cfg.n {
        let s = driver.next().expect("drivers are infinite");
        x = ifs.apply(s - 1, &x)?;
        orbit.symbols.push(s);
        let r = norm(&x);
        if !(r <= ESCAPE_RADIUS) {
            return Err(ChaosError::Escape { index: k, point: x });
        }
        if k % cfg.stride == 0 || k == cfg.n {
            orbit.indices.push(k);
            orbit.points.push(x);
        }
    }
    Ok(orbit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailStats {
    pub max_norm: f64,
    /// `(r, #{tail points with |x| > r})` for each of [`TAIL_RADII`].
    pub beyond: Vec<(f64, usize)>,
    pub tail_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaEstimate {
    pub cloud: PointCloud,
    pub stats: TailStats,
    pub burn_in: usize,
}

/// ε-net of the recorded tail `{x_k : k > m}`.
pub fn omega_limit(orbit: &Orbit, burn_in: usize, prune_eps: f64) -> Result<OmegaEstimate, ChaosError> {
    let start = orbit.indices.partition_point(|&k| k <= burn_in);
    let tail = &orbit.points[start..];
    if tail.is_empty() {
        return Err(ChaosError::EmptyTail { burn_in });
    }
    let norms: Vec<f64> = tail.iter().map(norm).collect();
    let stats = TailStats {
        max_norm: norms.iter().cloned().fold(0.0, f64::max),
        beyond: TAIL_RADII
            .iter()
            .map(|&r| (r, norms.iter().filter(|v| **v > r).count()))
            .collect(),
        tail_len: tail.len(),
    };
    let cloud = PointCloud::new(orbit.dim, orbit.metric, tail.to_vec(), prune_eps)?;
    Ok(OmegaEstimate {
        cloud,
        stats,
        burn_in,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosReport {
    pub passed: bool,
    pub tol: f64,
    pub prune_eps: f64,
    /// `None` when the orbit escaped.
    pub hausdorff: Option<f64>,
    /// `e(ω̂, reference)`.
    pub excess_omega_ref: Option<f64>,
    /// `e(reference, ω̂)`.
    pub excess_ref_omega: Option<f64>,
    pub reason: Option<String>,
    /// `(m, d_H(ω̂_m, reference))` for `m ∈ {n/10, n/4, n/2}`.
    pub sensitivity: Vec<(usize, f64)>,
    pub tail: Option<TailStats>,
    pub omega: Option<PointCloud>,
}

/// Runs the orbit and compares its ω-limit estimate with `reference`;
/// passes iff `d_H ≤ tol`. An escaping orbit fails with reason
/// "orbit unbounded".
pub fn chaos_vs_attractor(
    ifs: &IFSystem,
    cfg: &OrbitConfig,
    reference: &PointCloud,
    tol: f64,
    prune_eps: f64,
) -> Result<ChaosReport, ChaosError> {
    if reference.dim() != ifs.dim() || reference.metric() != ifs.metric() {
        return Err(HyperspaceError::Mismatch.into());
    }
    let orbit = match run_orbit(ifs, cfg) {
        Ok(o) => o,
        Err(ChaosError::Escape { index, point }) => {
            return Ok(ChaosReport {
                passed: false,
                tol,
                prune_eps,
                hausdorff: None,
                excess_omega_ref: None,
                excess_ref_omega: None,
                reason: Some(format!(
                    "orbit unbounded: escaped at step {index} to {:?}",
                    &point[..ifs.dim()]
                )),
                sensitivity: Vec::new(),
                tail: None,
                omega: None,
            })
        }
        Err(e) => return Err(e),
    };
    let omega = omega_limit(&orbit, cfg.burn_in, prune_eps)?;
    let e_or = excess(&omega.cloud, reference)?;
    let e_ro = excess(reference, &omega.cloud)?;
    let d = e_or.max(e_ro);
    let mut sensitivity = Vec::new();
    for m in [cfg.n / 10, cfg.n / 4, cfg.n / 2] {
        if let Ok(o) = omega_limit(&orbit, m, prune_eps) {
            let dm = excess(&o.cloud, reference)?.max(excess(reference, &o.cloud)?);
            sensitivity.push((m, dm));
        }
    }
    let passed = d <= tol;
    let reason = if passed {
        None
    } else if e_or > tol {
        Some(format!("omega-limit exceeds reference by {e_or:.6}"))
    } else {
        Some(format!("omega-limit misses reference by {e_ro:.6}"))
    };
    Ok(ChaosReport {
        passed,
        tol,
        prune_eps,
        hausdorff: Some(d),
        excess_omega_ref: Some(e_or),
        excess_ref_omega: Some(e_ro),
        reason,
        sensitivity,
        tail: Some(omega.stats),
        omega: Some(omega.cloud),
    })
}

#[derive(Debug, Clone)]
pub struct StochasticOptions {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Disjunctivity is checked for all words of length ≤ k.
    pub k: usize,
    pub tol: f64,
    pub prune_eps: f64,
    pub burn_in: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub seed: u64,
    pub disjunctive_upto_k: bool,
    pub missing: Vec<Word>,
    /// `None` when the orbit escaped.
    pub hausdorff: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticReport {
    pub k: usize,
    pub trials: Vec<TrialReport>,
    pub disjunctive_count: usize,
    pub passed_count: usize,
    /// `d_H` between the union of all trial tails and the reference.
    pub pooled_hausdorff: Option<f64>,
}

/// Independent seeded replicas of `driver`, run in parallel; trial `i`
/// gets the `i`-th output of a ChaCha stream seeded with `opts.seed`.
pub fn stochastic_driver_run(
    ifs: &IFSystem,
    x0: Point,
    driver: &Driver,
    reference: &PointCloud,
    opts: &StochasticOptions,
) -> Result<StochasticReport, ChaosError> {
    if opts.trials == 0 {
        return Err(ChaosError::InvalidConfig("trials must be ≥ 1".into()));
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<u64> = (0..opts.trials).map(|_| seeder.next_u64()).collect();
    let results = seeds
        .par_iter()
        .map(|&seed| -> Result<(TrialReport, Option<Vec<Point>>), ChaosError> {
            let mut cfg = OrbitConfig::new(x0, driver.reseeded(seed), opts.n);
            if let Some(m) = opts.burn_in {
                cfg = cfg.with_burn_in(m);
            }
            let orbit = match run_orbit(ifs, &cfg) {
                Ok(o) => o,
                Err(ChaosError::Escape { .. }) => {
                    return Ok((
                        TrialReport {
                            seed,
                            disjunctive_upto_k: false,
                            missing: Vec::new(),
                            hausdorff: None,
                            passed: false,
                        },
                        None,
                    ))
                }
                Err(e) => return Err(e),
            };
            let check = is_disjunctive_upto(&orbit.word(ifs.len()), opts.k)?;
            let omega = omega_limit(&orbit, cfg.burn_in, opts.prune_eps)?;
            let d = excess(&omega.cloud, reference)?.max(excess(reference, &omega.cloud)?);
            Ok((
                TrialReport {
                    seed,
                    disjunctive_upto_k: check.disjunctive,
                    missing: check.missing,
                    hausdorff: Some(d),
                    passed: d <= opts.tol,
                },
                Some(omega.cloud.into_points()),
            ))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut trials = Vec::with_capacity(results.len());
    let mut pooled = Vec::new();
    for (t, pts) in results {
        trials.push(t);
        if let Some(p) = pts {
            pooled.extend(p);
        }
    }
    let pooled_hausdorff = if pooled.is_empty() {
        None
    } else {
        let cloud = PointCloud::new(ifs.dim(), *ifs.metric(), pooled, opts.prune_eps)?;
        Some(excess(&cloud, reference)?.max(excess(reference, &cloud)?))
    };
    Ok(StochasticReport {
        k: opts.k,
        disjunctive_count: trials.iter().filter(|t| t.disjunctive_upto_k).count(),
        passed_count: trials.iter().filter(|t| t.passed).count(),
        trials,
        pooled_hausdorff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codespace::DriverKind;
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
    fn hand_applied_steps() {
        let d = Driver::new(DriverKind::Explicit(Word::parse("2,1", 2).unwrap()), 2).unwrap();
        let cfg = OrbitConfig::new(pt1(0.0), d, 2).with_burn_in(0);
        let o = run_orbit(&cantor(), &cfg).unwrap();
        assert!((o.points[1][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((o.points[2][0] - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn single_halving_map() {
        let ifs = IFSystem::new(vec![MapSpec::scalar(0.5, 0.0)], Bounds::interval(0.0, 1.0)).unwrap();
        let d = Driver::periodic(Word::constant(1, 1, 1).unwrap()).unwrap();
        let o = run_orbit(&ifs, &OrbitConfig::new(pt1(1.0), d, 10).with_burn_in(0)).unwrap();
        assert_eq!(o.last()[0], 2f64.powi(-10));
    }

    #[test]
    fn constant_orbit_gives_one_point() {
        let ifs = IFSystem::new(
            vec![MapSpec::scalar(1.0, 0.0), MapSpec::scalar(1.0, 0.0)],
            Bounds::interval(0.0, 1.0),
        )
        .unwrap();
        let o = run_orbit(&ifs, &OrbitConfig::new(pt1(0.3), Driver::champernowne(2), 500).with_burn_in(10)).unwrap();
        assert!(o.points.iter().all(|p| p[0] == 0.3));
        assert_eq!(omega_limit(&o, 10, 0.0).unwrap().cloud.len(), 1);
    }

    #[test]
    fn escape_is_reported() {
        let ifs = IFSystem::new(vec![MapSpec::scalar(2.0, 0.0)], Bounds::interval(-1.0, 1.0)).unwrap();
        let d = Driver::periodic(Word::constant(1, 1, 1).unwrap()).unwrap();
        let err = run_orbit(&ifs, &OrbitConfig::new(pt1(1.0), d, 100).with_burn_in(0)).unwrap_err();
        assert!(matches!(err, ChaosError::Escape { index: 40, .. }), "{err:?}");
    }

    #[test]
    fn config_is_checked() {
        let cfg = OrbitConfig::new(pt1(0.0), Driver::champernowne(3), 10).with_burn_in(0);
        assert!(matches!(run_orbit(&cantor(), &cfg), Err(ChaosError::InvalidConfig(_))));
        let cfg = OrbitConfig::new(pt1(0.0), Driver::champernowne(2), 10).with_burn_in(10);
        assert!(matches!(run_orbit(&cantor(), &cfg), Err(ChaosError::InvalidConfig(_))));
    }
}
