//! `eqnorm`: batch pipeline over math word problem data.
//!
//! Exit status: 0 on success, 1 on bad input, 2 on internal failure.
//! Machine-readable output goes to files or stdout; progress and summaries
//! go to stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eqnorm_core::NormalizeConfig;

#[derive(Parser, Debug)]
#[command(name = "eqnorm", version, about = "Equation-template preprocessing, normalization, scoring and ensembling")]
struct Cli {
    /// Worker threads for per-record work (outputs do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Normalization passes; all are on unless switched off.
#[derive(Args, Debug, Clone, Copy)]
struct PassFlags {
    /// Cancel duplicated opposite terms (rule: shorter equation).
    #[arg(long, overrides_with = "no_se")]
    se: bool,
    #[arg(long)]
    no_se: bool,
    /// Order terms by number-token index.
    #[arg(long, overrides_with = "no_oe")]
    oe: bool,
    #[arg(long)]
    no_oe: bool,
    /// Eliminate brackets by splicing parenthesized chains.
    #[arg(long, overrides_with = "no_eb")]
    eb: bool,
    #[arg(long)]
    no_eb: bool,
}

impl PassFlags {
    fn config(&self) -> NormalizeConfig {
        NormalizeConfig { enable_se: !self.no_se, enable_oe: !self.no_oe, enable_eb: !self.no_eb }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build normalized templates from a Math23K-format file.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Stats file; defaults to `<out>.stats.json`.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[command(flatten)]
        passes: PassFlags,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = eqnorm_core::eval::DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Oracle trials per record comparing raw and normalized templates (0 disables).
        #[arg(long, default_value_t = eqnorm_core::oracle::DEFAULT_TRIALS)]
        trials: usize,
        /// Report and skip malformed records instead of failing.
        #[arg(long)]
        lenient: bool,
        /// Leave out records whose equation uses numbers absent from the text.
        #[arg(long)]
        drop_uncovered: bool,
    },
    /// Normalize one infix expression, or one per line of a file.
    Normalize {
        #[arg(long, required_unless_present = "input", conflicts_with = "input")]
        expr: Option<String>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[command(flatten)]
        passes: PassFlags,
    },
    /// Score predicted postorder sequences against processed records.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value_t = eqnorm_core::eval::DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Per-record verdict file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick the highest-probability candidate per problem across models.
    Ensemble {
        /// Candidate files (repeatable).
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Tie-break order of model ids, comma separated.
        #[arg(long, value_delimiter = ',')]
        priority: Vec<String>,
        /// Processed records; ids without any candidate are reported missing.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Dedup and coverage report of a processed-records file.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a seeded validation sample from a line-delimited training file.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        /// Held-out test file, copied through unchanged.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        validation_size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Randomized value-equivalence check of two templates, or of every
    /// record's raw and normalized template.
    OracleCheck {
        #[arg(long, requires = "b", required_unless_present = "input")]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long = "in", conflicts_with_all = ["a", "b"])]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = eqnorm_core::oracle::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let run = || commands::run(cli.command);
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(commands::Failure::Internal(e.into())),
        },
        None => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            ExitCode::from(failure.code())
        }
    }
}
