//! Batch front end for `metricgraph-core`: ingestion, pipeline runs, density
//! analysis and network queries, with deterministic file outputs.
//!
//! Exit codes: 0 success, 2 input, 3 numeric, 4 lookup, 5 internal. Errors
//! are reported on standard error as a single JSON document.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::PipelineConfig;
pub use error::{CliError, CliResult, ExitClass};

/// Environment variable capping the worker threads of each stage.
pub const THREADS_ENV: &str = "METRICGRAPH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "metricgraph", version, about = "Entity distance graphs and density analytics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build phi, the gauge distance and the final distance from raw data.
    Build {
        /// Entity table (`id,<features>`), corpus (`entity_id,doc_id,count`)
        /// or, with the `matrix` builder, a proximity matrix.
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Column metadata sidecar for an entity table.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Concentration of mass, r_max and density flags for a distance matrix.
    Analyze {
        matrix: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Network queries; results are printed as JSON.
    Query {
        #[command(subcommand)]
        query: Query,
    },
    /// Checks the metric axioms of a matrix and prints the report.
    Validate {
        matrix: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `tolerances.validation`.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Query {
    /// Entities strictly closer than EPS to ID.
    Neighbors {
        matrix: PathBuf,
        id: String,
        eps: f64,
    },
    /// Members of the subset nearest to ID (all ties).
    Nearest {
        matrix: PathBuf,
        id: String,
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<String>,
    },
    /// Change of the distance matrix when ID is removed from the data.
    Influence {
        /// Raw input, as for `build`.
        input: PathBuf,
        id: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Classes of entities with equivalent behavior, from a correlation matrix.
    Spectral {
        corr: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let err = CliError::new(ExitClass::Input, e.to_string().trim().to_string());
                    eprintln!("{}", err.to_json());
                    err.class.code()
                }
            };
        }
    };
    match configure_threads().and_then(|_| commands::execute(&cli.command)) {
        Ok(stdout) => {
            if let Some(text) = stdout {
                print!("{text}");
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.class.code()
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::new(ExitClass::Input, format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
