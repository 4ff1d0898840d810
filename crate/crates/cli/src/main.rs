//! `scimap`: build co-word maps from bibliographic CSV exports.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error. Errors are reported on
//! stderr as a single JSON line `{"error": <code>, "message": <text>}`.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scimap_core::{PipelineConfig, UnitKind};

#[derive(Debug, Parser)]
#[command(name = "scimap", version, about = "Co-word science maps from bibliographic exports")]
struct Cli {
    /// Directory holding the corpus cache and generated files.
    #[arg(long, global = true, env = "SCIMAP_DATA_DIR", default_value = "scimap-data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a CSV export into the corpus cache.
    Ingest {
        csv: PathBuf,
        /// Abort on the first malformed row instead of skipping it.
        #[arg(long)]
        strict: bool,
        /// JSON file overriding column names and delimiters.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Apply a thesaurus to the cached corpus and list the surviving terms.
    Clean {
        #[arg(long)]
        thesaurus: PathBuf,
        #[arg(long, default_value = "keywords", value_parser = parse_unit)]
        unit: UnitKind,
    },
    /// Build the map, network and JSON files.
    Map {
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Derived reports from the last built map.
    Export {
        /// Report labels whose average publication date is after this
        /// fractional year.
        #[arg(long, allow_negative_numbers = true)]
        cutoff: Option<f64>,
        /// Write the density grid in this format.
        #[arg(long)]
        density: Option<DensityFormat>,
        /// Grid points per side for the density grid.
        #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(2..=4000))]
        grid: u32,
        /// Kernel bandwidth; defaults to 5% of the larger layout extent.
        #[arg(long, value_parser = parse_positive)]
        bandwidth: Option<f64>,
    },
    /// Serve the map over HTTP on the loopback interface.
    Serve {
        #[arg(long, default_value_t = 8750)]
        port: u16,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Write a seeded synthetic CSV export, for demos.
    Synthetic {
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        records: usize,
    },
    /// Talk to a running `scimap serve`.
    Remote {
        #[arg(long, env = "SCIMAP_URL", default_value = "http://127.0.0.1:8750")]
        url: String,
        #[command(subcommand)]
        action: RemoteAction,
    },
}

#[derive(Debug, Subcommand)]
enum RemoteAction {
    /// Print the current map JSON.
    Map,
    Config,
    /// Print the session thesaurus as TSV.
    Thesaurus,
    /// Append the rules in a TSV file.
    AddRules { file: PathBuf },
    /// Rebuild the map and print it.
    Rebuild,
    Neighbors { id: usize },
    Overlay {
        #[arg(long, allow_negative_numbers = true)]
        cutoff: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DensityFormat {
    Pgm,
    Json,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long, default_value = "keywords", value_parser = parse_unit)]
    unit: UnitKind,
    /// Minimum number of records an item must occur in.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    min_occurrences: u64,
    /// Clustering resolution; higher values give more clusters.
    #[arg(long, default_value_t = 1.0, value_parser = parse_non_negative)]
    resolution: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    restarts: u64,
    /// Thesaurus TSV applied before building.
    #[arg(long)]
    thesaurus: Option<PathBuf>,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            unit: self.unit,
            min_occurrences: self.min_occurrences as usize,
            resolution: self.resolution,
            seed: self.seed,
            restarts: self.restarts as usize,
            ..PipelineConfig::default()
        }
    }
}

fn parse_unit(s: &str) -> Result<UnitKind, String> {
    s.parse()
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a non-negative number")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a positive number")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
            commands::report("usage", first);
            return ExitCode::from(2);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("SCIMAP_LOG").unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            commands::report(e.code, &e.message);
            ExitCode::from(1)
        }
    }
}
