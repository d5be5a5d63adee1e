//! Command-line driver: ingest World Bank files, run transfer experiments and
//! write report trees.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use datl::fraction::Fraction;
use datl::regress::Method;
use datl::transfer::{MixingPolicy, ValidationSplit};
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("ingest: {0}")]
    Ingest(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        }
    }
}

impl From<datl::report::ReportError> for CliError {
    fn from(e: datl::report::ReportError) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Whether every sub-run of a command succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Complete,
    Partial,
}

impl Completion {
    pub fn exit_code(self) -> u8 {
        match self {
            Completion::Complete => EXIT_OK,
            Completion::Partial => EXIT_PARTIAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "datl",
    version,
    about = "Transfer-learning GDP prediction from CO2 emission series"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Base directory for every relative path
    #[arg(long, global = true, default_value = ".")]
    pub workdir: PathBuf,
    /// Run configuration (TOML), relative to the working directory
    #[arg(long, global = true, default_value = "datl.toml")]
    pub config: PathBuf,
    /// Worker threads; 1 runs everything sequentially
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Report sub-directory name; defaults to the command name
    #[arg(long, global = true)]
    pub run_id: Option<String>,
    /// Seed; overrides DATL_SEED and the config file
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

fn parse_mixing(s: &str) -> Result<MixingPolicy, String> {
    match s {
        "earliest_years" | "earliest-years" => Ok(MixingPolicy::EarliestYears),
        "seeded_random" | "seeded-random" => Ok(MixingPolicy::SeededRandom),
        _ => Err(format!(
            "unknown mixing policy {s:?} (expected earliest_years or seeded_random)"
        )),
    }
}

fn parse_validation(s: &str) -> Result<ValidationSplit, String> {
    match s {
        "seeded_random" | "seeded-random" => Ok(ValidationSplit::SeededRandom),
        "chronological_last" | "chronological-last" => Ok(ValidationSplit::ChronologicalLast),
        _ => Err(format!(
            "unknown validation split {s:?} (expected seeded_random or chronological_last)"
        )),
    }
}

#[derive(Debug, Clone, Args)]
pub struct TransferArgs {
    /// Share of target rows mixed into training, as a fraction like 1/18
    #[arg(long)]
    pub td: Option<Fraction>,
    /// Which target rows are mixed in: earliest_years or seeded_random
    #[arg(long, value_parser = parse_mixing)]
    pub mixing: Option<MixingPolicy>,
    /// Accept fractions outside [0, 1/2]
    #[arg(long)]
    pub allow_any_fraction: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the indicator files and write the dataset bundle and a
    /// completeness summary
    Ingest,
    /// Train on one source (plus target share) and predict one target
    RunPair {
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        /// grnn, elm, svr or elm-random
        #[arg(long)]
        regressor: Method,
        #[command(flatten)]
        transfer: TransferArgs,
    },
    /// Every ordered pair of configured countries times every regressor
    RunMatrix {
        #[command(flatten)]
        transfer: TransferArgs,
    },
    /// The pairwise matrix at each fraction, aggregated per regressor
    SweepTd {
        /// Comma-separated fractions, e.g. 0,1/18,1/9
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<Fraction>>,
        /// Which target rows are mixed in: earliest_years or seeded_random
        #[arg(long, value_parser = parse_mixing)]
        mixing: Option<MixingPolicy>,
        /// Accept fractions outside [0, 1/2]
        #[arg(long)]
        allow_any_fraction: bool,
    },
    /// Select a model on held-out years and fill missing GDP values
    EstimateMissing {
        /// Country to fill; repeatable. Defaults to the configured list
        #[arg(long)]
        country: Vec<String>,
        /// seeded_random or chronological_last
        #[arg(long, value_parser = parse_validation)]
        validation: Option<ValidationSplit>,
    },
    /// Re-render the CSV views from an existing report.json
    Report {
        /// Directory holding report.json, relative to the working directory
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
/// Errors are printed to stderr.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(&cli) {
        Ok(done) => done.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
