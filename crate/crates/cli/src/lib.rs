//! The `ifslab` command-line tool: spec loading, subcommands, and the
//! output formats they write.

pub mod commands;
pub mod error;
pub mod formats;
pub mod gallery;
pub mod report;
pub mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;
pub use spec::{load_ifs, parse_ifs, SpecError};

#[derive(Debug, Parser)]
#[command(name = "ifslab", version, about = "Iterated function systems: attractors, chaos games, invariant measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// IFS spec file (JSON, schema version 1)
    #[arg(long, value_name = "PATH", conflicts_with = "example")]
    pub ifs: Option<PathBuf>,
    /// Built-in gallery system instead of --ifs
    #[arg(long, value_name = "ID")]
    pub example: Option<String>,
    /// Directory for artifacts and report.json
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every random choice of the run
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add wall-clock timings to the report (the report is then no longer byte-stable)
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct Raster {
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    #[arg(long, default_value_t = 512)]
    pub height: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attractor by Hutchinson iteration; writes attractor.csv and attractor.pgm
    Render {
        #[command(flatten)]
        common: Common,
        /// Stop when the step distance d_H(S_k, S_k+1) is at most this
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// ε-net resolution (default tol/4)
        #[arg(long)]
        prune_eps: Option<f64>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[command(flatten)]
        raster: Raster,
    },
    /// F^n of a grid over the domain, approximating the maximal attractor
    Iterate {
        #[command(flatten)]
        common: Common,
        /// Number of Hutchinson steps n
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Grid spacing and ε-net resolution (default: longest side / 100)
        #[arg(long)]
        prune_eps: Option<f64>,
        #[command(flatten)]
        raster: Raster,
    },
    /// Chaos game: orbit, ω-limit estimate and comparison with a reference
    Chaos {
        #[command(flatten)]
        common: Common,
        /// champernowne | periodic:PATTERN | bernoulli[:W1,W2,..] | markov:PATH | minorant:FAMILY:PARAM
        #[arg(long, default_value = "champernowne")]
        driver: String,
        /// Orbit length
        #[arg(short = 'n', long = "n", default_value_t = 100_000)]
        n: usize,
        /// Burn-in m (default max(1000, n/100))
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Start point, comma separated (default: domain center)
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Reference attractor as point CSV (default: computed by Hutchinson iteration)
        #[arg(long = "ref", value_name = "PATH")]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        /// ε-net resolution of the ω-limit estimate (default tol/4)
        #[arg(long)]
        prune_eps: Option<f64>,
        /// Independent reseeded runs of a random driver
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Word length for the per-trial disjunctivity check
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        raster: Raster,
    },
    /// Markov operator: invariant measure, Cesàro average or Bernoulli image
    Measure {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = MeasureMode::Invariant)]
        mode: MeasureMode,
        /// Start point of the Dirac initial measure (default: domain center)
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        /// Atoms closer than half of this are merged
        #[arg(long, default_value_t = 1e-4)]
        merge_radius: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        /// Number of averaged iterates (mann mode)
        #[arg(short = 'n', long = "n", default_value_t = 1000)]
        n: usize,
        /// Word length k (bernoulli mode)
        #[arg(long, default_value_t = 10)]
        depth: usize,
        /// Sampled words when N^k exceeds the exact budget (bernoulli mode)
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Measure CSV to compare against; writes the optimal plan
        #[arg(long = "ref", value_name = "PATH")]
        reference: Option<PathBuf>,
    },
    /// Numerical contraction-class analysis
    Classify {
        #[command(flatten)]
        common: Common,
        /// Rakotch coefficients c_i for the average-Rakotch test, comma separated
        #[arg(long)]
        coefficients: Option<String>,
        /// Largest composition length for the eventual-contraction search
        #[arg(long)]
        p_max: Option<usize>,
        /// Sample pairs per map
        #[arg(long)]
        samples: Option<usize>,
        /// Log bins of the Rakotch envelopes
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Code space: Williams points, coded points, driver sequences, minorants
    Codes {
        #[command(subcommand)]
        command: CodesCommand,
    },
    /// Built-in gallery of example systems
    Examples {
        /// Print the gallery ids
        #[arg(long)]
        list: bool,
        /// Print the spec of one example
        #[arg(long, value_name = "ID")]
        show: Option<String>,
        /// Write every spec as DIR/ID.json
        #[arg(long, value_name = "DIR")]
        write: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CodesCommand {
    /// Fixed points of w_α for all words with |α| ≤ depth
    Williams {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Picard tolerance
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// w_α(x0) for one word, with the truncation bound when the maps are Banach contractions
    Point {
        #[command(flatten)]
        common: Common,
        /// Symbols 1..N, comma separated
        #[arg(long)]
        word: String,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
    },
    /// Prefix of a driver sequence with its disjunctivity check
    Sequence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "champernowne")]
        driver: String,
        /// Alphabet size (default: number of maps of --ifs/--example)
        #[arg(long)]
        symbols: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        /// Check that every word of length ≤ this occurs
        #[arg(long, default_value_t = 3)]
        check: usize,
    },
    /// Verdict on the minorant growth condition for a probability family
    Minorant {
        #[command(flatten)]
        common: Common,
        /// const:P | logpow:A | pow:A | sinpow:A
        family: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureMode {
    Invariant,
    Mann,
    Bernoulli,
}

/// Caps rayon's global pool from `IFSLAB_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("IFSLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Validation(format!("IFSLAB_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    commands::dispatch(cli.command)
}
