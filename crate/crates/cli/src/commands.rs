//! Subcommand implementations. Each fills a [`RunReport`] and writes its
//! artifacts into `--out`; [`dispatch`] turns the outcome into an exit code.

use std::fs;
use std::path::{Path, PathBuf};

use ifslab_core::chaosgame::{chaos_vs_attractor, run_orbit, stochastic_driver_run, OrbitConfig, StochasticOptions};
use ifslab_core::codespace::{
    coding_point, is_disjunctive_upto, minorant_verdict, williams_points, Driver, DriverKind, MinorantFamily, Word,
};
use ifslab_core::geometry::{point_from_slice, Bounds, Point};
use ifslab_core::hyperspace::{attractor, maximal_attractor, AttractorOptions, PointCloud};
use ifslab_core::mapkit::{classify, ClassificationReport, ClassifyOptions, ComparisonFunction, IFSystem, PointMap};
use ifslab_core::measurekit::{
    bernoulli_pushforward, invariant_measure, mann_average, transport_solution, BernoulliMode, DiscreteMeasure,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::formats::{
    canonical_json, measure_csv, nums, orbit_csv, pgm, plan_csv, point_json, points_csv, ppm, read_matrix_csv,
    read_measure_csv, read_points_csv,
};
use crate::gallery;
use crate::report::RunReport;
use crate::spec::parse_ifs;
use crate::{CodesCommand, Command, Common, MeasureMode, Raster};

/// Largest seed grid `iterate` will build.
const GRID_BUDGET: usize = 1_000_000;

struct Run {
    report: RunReport,
    out: Option<PathBuf>,
}

impl Run {
    fn new(command: &str, common: &Common) -> Self {
        let mut report = RunReport::new(command, common.timings);
        report.param("seed", common.seed);
        Self {
            report,
            out: common.out.clone(),
        }
    }

    fn prepare_out(&self) -> Result<(), CliError> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
        }
        Ok(())
    }

    /// Writes `name` into the output directory; a no-op without `--out`.
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = &self.out {
            fs::write(dir.join(name), bytes)
                .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", dir.join(name).display())))?;
            self.report.artifact(name);
        }
        Ok(())
    }

    fn load(&mut self, common: &Common) -> Result<IFSystem, CliError> {
        match (&common.ifs, &common.example) {
            (Some(path), _) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
                self.report.input("ifs", &path.display().to_string(), text.as_bytes());
                Ok(parse_ifs(&text)?)
            }
            (None, Some(id)) => {
                let text = gallery::source(id).ok_or_else(|| unknown_example(id))?;
                self.report.input("ifs", &format!("example:{id}"), text.as_bytes());
                Ok(parse_ifs(text)?)
            }
            (None, None) => Err(CliError::Validation("one of --ifs or --example is required".into())),
        }
    }

    fn input_file(&mut self, label: &str, path: &Path) -> Result<(), CliError> {
        let bytes =
            fs::read(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        self.report.input(label, &path.display().to_string(), &bytes);
        Ok(())
    }
}

fn unknown_example(id: &str) -> CliError {
    CliError::Validation(format!(
        "unknown example \"{id}\" (known: {})",
        gallery::ids().collect::<Vec<_>>().join(", ")
    ))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("--{name} must be a positive number, got {v}")))
    }
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(format!("{what}: {e} in {text:?}")))
}

fn parse_point(text: Option<&str>, ifs: &IFSystem) -> Result<Point, CliError> {
    let Some(text) = text else {
        return Ok(ifs.domain().center());
    };
    let c = parse_list(text, "--x0")?;
    if c.len() != ifs.dim() {
        return Err(CliError::Validation(format!(
            "--x0 has {} coordinates, the space has dimension {}",
            c.len(),
            ifs.dim()
        )));
    }
    Ok(point_from_slice(&c))
}

fn parse_family(text: &str) -> Result<MinorantFamily, CliError> {
    let bad = || CliError::Validation(format!("minorant family {text:?}: expected const:P, logpow:A, pow:A or sinpow:A"));
    let (name, param) = text.split_once(':').ok_or_else(bad)?;
    let p: f64 = param.trim().parse().map_err(|_| bad())?;
    Ok(match name {
        "const" => MinorantFamily::Const(p),
        "logpow" => MinorantFamily::LogPow(p),
        "pow" => MinorantFamily::Pow(p),
        "sinpow" => MinorantFamily::SinPow(p),
        _ => return Err(bad()),
    })
}

fn parse_driver(
    run: &mut Run,
    spec: &str,
    n: usize,
    seed: u64,
    weights: Option<&[f64]>,
) -> Result<Driver, CliError> {
    let (name, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (spec, None),
    };
    let kind = match (name, arg) {
        ("champernowne", None) => DriverKind::Champernowne,
        ("periodic", Some(p)) => DriverKind::Periodic(Word::parse(p, n)?),
        ("bernoulli", w) => {
            let weights = match w {
                Some(w) => parse_list(w, "bernoulli weights")?,
                None => weights.map_or_else(|| vec![1.0 / n as f64; n], <[f64]>::to_vec),
            };
            DriverKind::Bernoulli { weights, seed }
        }
        ("markov", Some(path)) => {
            let path = Path::new(path);
            run.input_file("markov", path)?;
            DriverKind::MarkovChain {
                rows: read_matrix_csv(path)?,
                seed,
            }
        }
        ("minorant", Some(f)) => DriverKind::Minorant {
            family: parse_family(f)?,
            seed,
        },
        _ => {
            return Err(CliError::Validation(format!(
                "unknown driver {spec:?} (expected champernowne, periodic:PATTERN, bernoulli[:W,..], markov:PATH or minorant:FAMILY:PARAM)"
            )))
        }
    };
    Ok(Driver::new(kind, n)?)
}

fn cloud(ifs: &IFSystem, points: Vec<Point>) -> Result<PointCloud, CliError> {
    Ok(PointCloud::new(ifs.dim(), *ifs.metric(), points, 0.0)?)
}

fn write_cloud_image(run: &mut Run, name: &str, c: &PointCloud, bbox: &Bounds, raster: Raster) -> Result<(), CliError> {
    if raster.width == 0 || raster.height == 0 {
        return Err(CliError::Validation("--width and --height must be at least 1".into()));
    }
    let img = pgm(c.points(), c.dim(), bbox, raster.width, raster.height);
    run.write(name, &img)
}

pub fn dispatch(command: Command) -> i32 {
    let (name, common) = match &command {
        Command::Render { common, .. } => ("render", common.clone()),
        Command::Iterate { common, .. } => ("iterate", common.clone()),
        Command::Chaos { common, .. } => ("chaos", common.clone()),
        Command::Measure { common, .. } => ("measure", common.clone()),
        Command::Classify { common, .. } => ("classify", common.clone()),
        Command::Codes { command } => match command {
            CodesCommand::Williams { common, .. } => ("codes williams", common.clone()),
            CodesCommand::Point { common, .. } => ("codes point", common.clone()),
            CodesCommand::Sequence { common, .. } => ("codes sequence", common.clone()),
            CodesCommand::Minorant { common, .. } => ("codes minorant", common.clone()),
        },
        Command::Examples { list, show, write } => return examples(*list, show.as_deref(), write.as_deref()),
    };
    let mut run = Run::new(name, &common);
    let result = run.prepare_out().and_then(|()| execute(&mut run, command));
    finish(run, result)
}

fn execute(run: &mut Run, command: Command) -> Result<(), CliError> {
    match command {
        Command::Render {
            common,
            tol,
            prune_eps,
            max_iter,
            raster,
        } => render(run, &common, tol, prune_eps, max_iter, raster),
        Command::Iterate {
            common,
            depth,
            prune_eps,
            raster,
        } => iterate(run, &common, depth, prune_eps, raster),
        Command::Chaos {
            common,
            driver,
            n,
            burn_in,
            stride,
            x0,
            reference,
            tol,
            prune_eps,
            trials,
            k,
            raster,
        } => {
            let args = ChaosArgs {
                driver,
                n,
                burn_in,
                stride,
                x0,
                reference,
                tol,
                prune_eps,
                trials,
                k,
                raster,
            };
            chaos(run, &common, args)
        }
        Command::Measure {
            common,
            mode,
            x0,
            merge_radius,
            tol,
            max_iter,
            n,
            depth,
            samples,
            reference,
        } => {
            let args = MeasureArgs {
                mode,
                x0,
                merge_radius,
                tol,
                max_iter,
                n,
                depth,
                samples,
                reference,
            };
            measure(run, &common, args)
        }
        Command::Classify {
            common,
            coefficients,
            p_max,
            samples,
            bins,
        } => classify_cmd(run, &common, coefficients, p_max, samples, bins),
        Command::Codes { command } => codes(run, command),
        Command::Examples { .. } => unreachable!("handled in dispatch"),
    }
}

/// Records the outcome, writes and prints the report, returns the exit code.
fn finish(mut run: Run, result: Result<(), CliError>) -> i32 {
    let result = result.and_then(|()| match run.report.failed_claim() {
        Some(reason) => Err(CliError::Numeric(reason)),
        None => Ok(()),
    });
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            run.report.fail(e.to_string(), e.kind(), e.exit_code());
            e.exit_code()
        }
    };
    let text = canonical_json(&run.report.to_value());
    if let Some(dir) = &run.out {
        if dir.is_dir() {
            if let Err(e) = fs::write(dir.join("report.json"), &text) {
                eprintln!("error: cannot write report: {e}");
                return 1;
            }
        }
    }
    print!("{text}");
    code
}

fn render(
    run: &mut Run,
    common: &Common,
    tol: f64,
    prune_eps: Option<f64>,
    max_iter: usize,
    raster: Raster,
) -> Result<(), CliError> {
    let ifs = run.load(common)?;
    let tol = positive("tol", tol)?;
    let eps = prune_eps.unwrap_or(tol / 4.0);
    run.report.param("tol", tol);
    run.report.param("prune_eps", eps);
    run.report.param("max_iter", max_iter);
    let seed = cloud(&ifs, vec![ifs.domain().center()])?;
    let opts = AttractorOptions::new(tol, max_iter).with_prune_eps(eps);
    let (att, trace) = run.report.timed("attractor", || attractor(&ifs, &seed, &opts))?;
    let steps: Vec<f64> = trace.records.iter().map(|r| r.step).collect();
    run.report.metric("points", att.len());
    run.report.metric("iterations", trace.records.len());
    run.report.metric("converged", trace.converged);
    run.report.metric("steps", nums(&steps));
    run.report.budget("prune_eps", eps);
    run.write("attractor.csv", points_csv(att.points(), ifs.dim()).as_bytes())?;
    write_cloud_image(run, "attractor.pgm", &att, ifs.domain(), raster)?;
    let last = steps.last().copied().unwrap_or(f64::INFINITY);
    if !trace.converged {
        return Err(CliError::Numeric(format!(
            "no convergence within {max_iter} iterations: last step {last:e} > tol {tol:e}"
        )));
    }
    run.report.claim("final_step", last, tol, "--tol");
    Ok(())
}

fn domain_grid(b: &Bounds, h: f64) -> Result<Vec<Point>, CliError> {
    let counts: Vec<usize> = (0..b.dim).map(|i| ((b.hi[i] - b.lo[i]) / h).ceil() as usize + 1).collect();
    let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c)).unwrap_or(usize::MAX);
    if total > GRID_BUDGET {
        return Err(CliError::Validation(format!(
            "seed grid of {total} points exceeds budget {GRID_BUDGET}; increase --prune-eps"
        )));
    }
    let mut points = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rest = idx;
        let mut p = [0.0; 3];
        for i in 0..b.dim {
            let c = counts[i];
            p[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * (rest % c) as f64 / (c - 1) as f64;
            rest /= c;
        }
        points.push(p);
    }
    Ok(points)
}

fn iterate(
    run: &mut Run,
    common: &Common,
    depth: usize,
    prune_eps: Option<f64>,
    raster: Raster,
) -> Result<(), CliError> {
    let ifs = run.load(common)?;
    let b = ifs.domain();
    let side = (0..b.dim).map(|i| b.hi[i] - b.lo[i]).fold(0.0, f64::max);
    let h = positive("prune-eps", prune_eps.unwrap_or(side / 100.0))?;
    run.report.param("depth", depth);
    run.report.param("prune_eps", h);
    let grid = cloud(&ifs, domain_grid(b, h)?)?;
    run.report.metric("seed_points", grid.len());
    let (set, mono) = run.report.timed("iterate", || maximal_attractor(&ifs, &grid, depth, h))?;
    run.report.metric("points", set.len());
    run.report.metric("excesses", nums(&mono.excesses));
    run.report.metric("monotone", mono.monotone);
    run.report.claim("trapping_excess", mono.trapping_excess, h, "--prune-eps (grid spacing)");
    let worst = mono.excesses.iter().copied().fold(0.0, f64::max);
    run.report.claim("max_step_excess", worst, h, "--prune-eps (ε-net resolution)");
    run.report.budget("prune_eps", h);
    run.write("maximal.csv", points_csv(set.points(), ifs.dim()).as_bytes())?;
    write_cloud_image(run, "maximal.pgm", &set, b, raster)
}

struct ChaosArgs {
    driver: String,
    n: usize,
    burn_in: Option<usize>,
    stride: usize,
    x0: Option<String>,
    reference: Option<PathBuf>,
    tol: f64,
    prune_eps: Option<f64>,
    trials: usize,
    k: usize,
    raster: Raster,
}

fn chaos(run: &mut Run, common: &Common, a: ChaosArgs) -> Result<(), CliError> {
    let ifs = run.load(common)?;
    let tol = positive("tol", a.tol)?;
    let eps = a.prune_eps.unwrap_or(tol / 4.0);
    let x0 = parse_point(a.x0.as_deref(), &ifs)?;
    let driver = parse_driver(run, &a.driver, ifs.len(), common.seed, ifs.weights())?;
    let mut cfg = OrbitConfig::new(x0, driver.clone(), a.n).with_stride(a.stride);
    if let Some(m) = a.burn_in {
        cfg = cfg.with_burn_in(m);
    }
    run.report.param("driver", a.driver.as_str());
    run.report.param("n", a.n);
    run.report.param("burn_in", cfg.burn_in);
    run.report.param("stride", a.stride);
    run.report.param("x0", point_json(&x0, ifs.dim()));
    run.report.param("tol", tol);
    run.report.param("prune_eps", eps);

    let reference = match &a.reference {
        Some(path) => {
            run.input_file("ref", path)?;
            cloud(&ifs, read_points_csv(path, ifs.dim())?)?
        }
        None => {
            // reference accurate to a quarter of the tolerance
            let opts = AttractorOptions::new(tol / 4.0, 200).with_prune_eps(tol / 16.0);
            let seed = cloud(&ifs, vec![ifs.domain().center()])?;
            let (att, trace) = run.report.timed("reference", || attractor(&ifs, &seed, &opts))?;
            if !trace.converged {
                return Err(CliError::Numeric("reference attractor iteration did not converge".into()));
            }
            run.report.metric("reference_points", att.len());
            run.report.budget("reference_step", trace.records.last().map_or(0.0, |r| r.step));
            att
        }
    };
    run.report.budget("prune_eps", eps);

    if a.trials > 1 {
        let opts = StochasticOptions {
            n: a.n,
            trials: a.trials,
            seed: common.seed,
            k: a.k,
            tol,
            prune_eps: eps,
            burn_in: a.burn_in,
        };
        let rep = run
            .report
            .timed("trials", || stochastic_driver_run(&ifs, x0, &driver, &reference, &opts))?;
        let trials: Vec<Value> = rep
            .trials
            .iter()
            .map(|t| {
                json!({
                    "seed": t.seed,
                    "disjunctive": t.disjunctive_upto_k,
                    "missing": t.missing.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                    "hausdorff": t.hausdorff.map(crate::formats::num),
                    "passed": t.passed,
                })
            })
            .collect();
        run.report.metric("trials", Value::Array(trials));
        run.report.metric("disjunctive_count", rep.disjunctive_count);
        run.report.metric("passed_count", rep.passed_count);
        if let Some(d) = rep.pooled_hausdorff {
            run.report.metric("pooled_hausdorff", crate::formats::num(d));
        }
        let failed = (a.trials - rep.passed_count) as f64;
        run.report.claim("failed_trials", failed, 0.0, "every trial within --tol");
        return Ok(());
    }

    let rep = run.report.timed("chaos", || chaos_vs_attractor(&ifs, &cfg, &reference, tol, eps))?;
    if let Some(d) = rep.hausdorff {
        run.report.metric("hausdorff", crate::formats::num(d));
    }
    if let (Some(e1), Some(e2)) = (rep.excess_omega_ref, rep.excess_ref_omega) {
        run.report.metric("excess_omega_ref", crate::formats::num(e1));
        run.report.metric("excess_ref_omega", crate::formats::num(e2));
    }
    let sens: Vec<Value> = rep
        .sensitivity
        .iter()
        .map(|(m, d)| json!({"burn_in": m, "hausdorff": crate::formats::num(*d)}))
        .collect();
    run.report.metric("sensitivity", Value::Array(sens));
    if let Some(t) = &rep.tail {
        let beyond: Vec<Value> = t
            .beyond
            .iter()
            .map(|(r, c)| json!({"radius": crate::formats::num(*r), "count": c}))
            .collect();
        run.report.metric(
            "tail",
            json!({"max_norm": crate::formats::num(t.max_norm), "length": t.tail_len, "beyond": beyond}),
        );
    }
    if let Some(om) = &rep.omega {
        run.report.metric("omega_points", om.len());
        run.write("omega.csv", points_csv(om.points(), ifs.dim()).as_bytes())?;
    }
    if run.out.is_some() {
        if let Ok(orbit) = run_orbit(&ifs, &cfg) {
            run.write("orbit.csv", orbit_csv(&orbit.indices, &orbit.points, ifs.dim()).as_bytes())?;
            let labels: Vec<usize> =
                orbit.indices.iter().map(|&k| if k == 0 { 0 } else { orbit.symbols[k - 1] }).collect();
            if a.raster.width == 0 || a.raster.height == 0 {
                return Err(CliError::Validation("--width and --height must be at least 1".into()));
            }
            let img = ppm(&orbit.points, &labels, ifs.dim(), ifs.domain(), a.raster.width, a.raster.height);
            run.write("orbit.ppm", &img)?;
        }
    }
    match rep.hausdorff {
        Some(d) if rep.passed => {
            run.report.claim("hausdorff", d, tol, "--tol");
            Ok(())
        }
        _ => Err(CliError::Numeric(rep.reason.unwrap_or_else(|| "chaos game check failed".into()))),
    }
}

struct MeasureArgs {
    mode: MeasureMode,
    x0: Option<String>,
    merge_radius: f64,
    tol: f64,
    max_iter: usize,
    n: usize,
    depth: usize,
    samples: usize,
    reference: Option<PathBuf>,
}

fn measure(run: &mut Run, common: &Common, a: MeasureArgs) -> Result<(), CliError> {
    let ifs = run.load(common)?;
    if ifs.weights().is_none() {
        return Err(CliError::Validation("the IFS spec has no \"weights\"; the Markov operator needs them".into()));
    }
    if !(a.merge_radius >= 0.0) {
        return Err(CliError::Validation("--merge-radius must be ≥ 0".into()));
    }
    let dim = ifs.dim();
    let x0 = parse_point(a.x0.as_deref(), &ifs)?;
    let mu0 = DiscreteMeasure::dirac(dim, *ifs.metric(), x0);
    run.report.param("merge_radius", a.merge_radius);
    let mu = match a.mode {
        MeasureMode::Invariant => {
            let tol = positive("tol", a.tol)?;
            run.report.param("mode", "invariant");
            run.report.param("x0", point_json(&x0, dim));
            run.report.param("tol", tol);
            run.report.param("max_iter", a.max_iter);
            let r = run
                .report
                .timed("invariant", || invariant_measure(&ifs, &mu0, tol, a.max_iter, a.merge_radius))?;
            run.report.metric("iterations", r.trace.len());
            run.report.metric("trace", nums(&r.trace));
            run.report.budget("merge_error", r.merge_error);
            run.report.claim("residual", r.residual, tol + r.merge_error, "--tol plus merge_error");
            r.measure
        }
        MeasureMode::Mann => {
            run.report.param("mode", "mann");
            run.report.param("x0", point_json(&x0, dim));
            run.report.param("n", a.n);
            let r = run.report.timed("mann", || mann_average(&ifs, &mu0, a.n, a.merge_radius))?;
            run.report.budget("merge_error", r.merge_error);
            let bound = 2.0 / a.n as f64 + r.merge_error;
            run.report.claim("residual", r.residual, bound, "Cesàro bound 2/n plus merge_error");
            r.measure
        }
        MeasureMode::Bernoulli => {
            run.report.param("mode", "bernoulli");
            run.report.param("depth", a.depth);
            run.report.param("samples", a.samples);
            let (m, mode) = run.report.timed("bernoulli", || {
                bernoulli_pushforward(&ifs, a.depth, a.samples, common.seed, a.merge_radius)
            })?;
            run.report.metric(
                "sampling",
                match mode {
                    BernoulliMode::Exact => "exact",
                    BernoulliMode::Sampled => "sampled",
                },
            );
            run.report.budget("merge_error", m.merge_cost());
            m
        }
    };
    run.report.metric("atoms", mu.len());
    run.report.metric("mean", point_json(&mu.mean(), dim));
    run.write("measure.csv", measure_csv(mu.atoms(), mu.weights(), dim).as_bytes())?;
    if let Some(path) = &a.reference {
        run.input_file("ref", path)?;
        let (atoms, weights) = read_measure_csv(path, dim)?;
        let nu = DiscreteMeasure::new(dim, *ifs.metric(), atoms, weights, 0.0)?;
        let sol = run.report.timed("transport", || transport_solution(&mu, &nu))?;
        run.report.metric("distance_to_ref", crate::formats::num(sol.value));
        run.report.metric("transport_pivots", sol.pivots);
        run.report.claim(
            "transport_certificate",
            -sol.min_reduced_cost,
            ifslab_core::measurekit::CERTIFICATE_TOL,
            "reduced-cost optimality certificate",
        );
        run.write("plan.csv", plan_csv(&sol.plan.entries).as_bytes())?;
    }
    Ok(())
}

fn classification_json(r: &ClassificationReport) -> Value {
    let envelopes: Vec<Value> = r
        .envelopes
        .iter()
        .map(|e| {
            json!({
                "edges": nums(&e.edges),
                "lambda": nums(&e.lambda),
                "covered": e.covered,
                "coverage": crate::formats::num(e.coverage()),
                "rakotch": e.verdict(),
            })
        })
        .collect();
    let region = &r.average_region;
    json!({
        "lipschitz": nums(&r.lipschitz),
        "exact": r.exact,
        "banach": r.banach,
        "edelstein_evidence": r.edelstein_evidence,
        "eventual_p": r.eventual_p,
        "envelopes": envelopes,
        "average_region": {
            "base": region.base + 1,
            "nonempty": region.nonempty,
            "inequalities": region.inequalities.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        },
        "average": r.average.as_ref().map(|a| json!({
            "weighted_lipschitz_sum": crate::formats::num(a.weighted_lipschitz_sum),
            "contractive": a.contractive,
        })),
        "average_rakotch": r.average_rakotch.as_ref().map(|a| json!({
            "coefficients": nums(&a.coefficients),
            "weighted_sum": crate::formats::num(a.weighted_sum),
            "sum_ok": a.sum_ok,
            "per_map": a.per_map,
            "verdict": a.verdict,
        })),
        "notes": r.notes,
    })
}

fn classify_cmd(
    run: &mut Run,
    common: &Common,
    coefficients: Option<String>,
    p_max: Option<usize>,
    samples: Option<usize>,
    bins: Option<usize>,
) -> Result<(), CliError> {
    let ifs = run.load(common)?;
    let mut opts = ClassifyOptions {
        seed: common.seed,
        ..ClassifyOptions::default()
    };
    if let Some(c) = coefficients {
        opts.coefficients = Some(parse_list(&c, "--coefficients")?);
    }
    opts.p_max = p_max.unwrap_or(opts.p_max);
    opts.samples = samples.unwrap_or(opts.samples);
    opts.bins = bins.unwrap_or(opts.bins);
    run.report.param("p_max", opts.p_max);
    run.report.param("samples", opts.samples);
    run.report.param("bins", opts.bins);
    let r = run.report.timed("classify", || classify(&ifs, &opts))?;
    run.report.metric("classification", classification_json(&r));
    Ok(())
}

fn codes(run: &mut Run, command: CodesCommand) -> Result<(), CliError> {
    match command {
        CodesCommand::Williams { common, depth, tol } => {
            let ifs = run.load(&common)?;
            run.report.param("depth", depth);
            run.report.param("tol", tol);
            let pts = run.report.timed("williams", || williams_points(&ifs, depth, tol))?;
            run.report.metric("points", pts.len());
            run.write("williams.csv", points_csv(pts.points(), ifs.dim()).as_bytes())
        }
        CodesCommand::Point { common, word, x0 } => {
            let ifs = run.load(&common)?;
            let w = Word::parse(&word, ifs.len())?;
            let base = parse_point(x0.as_deref(), &ifs)?;
            // a uniform Banach modulus certifies the truncation error
            let lip: Option<Vec<f64>> = ifs.maps().iter().map(|m| m.exact_lipschitz(ifs.metric())).collect();
            let phi = match lip.map(|l| l.into_iter().fold(0.0, f64::max)) {
                Some(l) if l < 1.0 => Some(ComparisonFunction::banach(l)?),
                _ => None,
            };
            run.report.param("word", w.to_string());
            run.report.param("x0", point_json(&base, ifs.dim()));
            let p = coding_point(&ifs, &w, &base, phi.as_ref())?;
            run.report.metric("point", point_json(&p.point, ifs.dim()));
            run.report.metric("bound", p.bound.map(crate::formats::num));
            Ok(())
        }
        CodesCommand::Sequence {
            common,
            driver,
            symbols,
            length,
            check,
        } => {
            let (n, weights) = match symbols {
                Some(n) => (n, None),
                None if common.ifs.is_some() || common.example.is_some() => {
                    let ifs = run.load(&common)?;
                    (ifs.len(), ifs.weights().map(<[f64]>::to_vec))
                }
                None => return Err(CliError::Validation("give --symbols, --ifs or --example".into())),
            };
            let mut d = parse_driver(run, &driver, n, common.seed, weights.as_deref())?;
            run.report.param("driver", driver.as_str());
            run.report.param("symbols", n);
            run.report.param("length", length);
            run.report.param("check", check);
            let w = d.take_word(length);
            let c = is_disjunctive_upto(&w, check)?;
            run.report.metric("disjunctive", c.disjunctive);
            run.report.metric("missing", c.missing.iter().map(|m| m.to_string()).collect::<Vec<_>>());
            run.write("sequence.txt", format!("{w}\n").as_bytes())
        }
        CodesCommand::Minorant { common: _, family } => {
            let f = parse_family(&family)?;
            let v = minorant_verdict(f);
            run.report.param("family", f.name());
            run.report.metric("satisfies", v.satisfies);
            let table: Vec<Value> = v
                .table
                .iter()
                .map(|(c, n, r)| json!({"c": crate::formats::num(*c), "n": crate::formats::num(*n), "ratio": crate::formats::num(*r)}))
                .collect();
            run.report.metric("table", Value::Array(table));
            Ok(())
        }
    }
}

fn examples(list: bool, show: Option<&str>, write: Option<&Path>) -> i32 {
    let result = (|| -> Result<(), CliError> {
        if !list && show.is_none() && write.is_none() {
            return Err(CliError::Validation("give --list, --show ID or --write DIR".into()));
        }
        if list {
            for id in gallery::ids() {
                println!("{id}");
            }
        }
        if let Some(id) = show {
            print!("{}", gallery::source(id).ok_or_else(|| unknown_example(id))?);
        }
        if let Some(dir) = write {
            fs::create_dir_all(dir)?;
            for (id, text) in gallery::GALLERY {
                fs::write(dir.join(format!("{id}.json")), text)?;
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut report = RunReport::new("examples", false);
            report.fail(e.to_string(), e.kind(), e.exit_code());
            print!("{}", canonical_json(&report.to_value()));
            e.exit_code()
        }
    }
}
