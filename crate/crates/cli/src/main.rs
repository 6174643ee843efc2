//! `solintent` — batch pipeline for Solidity contract intent analysis:
//! extract function snippets, embed them, train/apply the cosine k-means
//! intent highlight, train the multi-label classifier, detect, evaluate,
//! and render reports.
//!
//! Exit codes: 0 success, 1 runtime/data error, 2 usage error.

mod commands;
mod config;
mod out;
mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::detect::DetectArgs;
use commands::evaluate::EvaluateArgs;
use commands::fetch::FetchArgs;
use commands::report::{ReportArgs, ReportFormat};
use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "solintent", version, about = "Solidity contract intent analysis pipeline")]
struct Cli {
    /// Plain-text key=value configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one configuration key (repeatable), e.g. --set dim=64.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Proceed when an input artifact was produced under a different
    /// configuration (hash mismatch becomes a note instead of an error).
    #[arg(long, global = true)]
    allow_config_mismatch: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize dataset sources and extract function-level snippets.
    Extract,
    /// Encode snippets into per-function embedding vectors.
    Embed,
    /// Train the cosine k-means intent-highlight model.
    TrainHighlight,
    /// Scale strong-intent embedding rows using the trained k-means model.
    Highlight,
    /// Train the multi-label intent classifier on highlighted embeddings.
    Train,
    /// Detect intent in a single contract and rank its functions.
    Detect {
        /// Path to a raw Solidity source file.
        #[arg(long, value_name = "FILE")]
        source: Option<PathBuf>,
        /// Address of a contract already present in the dataset.
        #[arg(long)]
        address: Option<String>,
        /// Where to write the detections JSON (defaults to the configured path).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Evaluate trained weights on a labeled dataset.
    Evaluate {
        /// Dataset to evaluate against (defaults to the configured dataset).
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        /// Weights file(s); repeat to compare several models.
        #[arg(long = "weights", value_name = "FILE")]
        weights: Vec<PathBuf>,
        /// Also export the summary metrics as CSV.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Render a detections file as a JSON or HTML report.
    Report {
        /// Detections file to render (defaults to the configured path).
        #[arg(long, value_name = "FILE")]
        detections: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "html")]
        format: ReportFormat,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Fetch one contract source from an explorer-style HTTP endpoint.
    Fetch {
        #[arg(long)]
        address: String,
        /// URL template with an `{address}` placeholder.
        #[arg(long)]
        endpoint: Option<String>,
        /// Dataset file to append the fetched contract to.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match PipelineConfig::load(cli.config.as_deref(), &cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => return fail(2, &e),
    };
    let allow = cli.allow_config_mismatch;
    let result = match cli.command {
        Command::Extract => commands::extract::run(&cfg),
        Command::Embed => commands::embed::run(&cfg, allow),
        Command::TrainHighlight => commands::train_highlight::run(&cfg, allow),
        Command::Highlight => commands::highlight::run(&cfg, allow),
        Command::Train => commands::train::run(&cfg, allow),
        Command::Detect { source, address, out } => commands::detect::run(
            &cfg,
            &DetectArgs {
                source,
                address,
                out,
            },
            allow,
        ),
        Command::Evaluate {
            dataset,
            weights,
            csv,
        } => commands::evaluate::run(
            &cfg,
            &EvaluateArgs {
                dataset,
                weights,
                csv,
            },
            allow,
        ),
        Command::Report {
            detections,
            format,
            out,
        } => commands::report::run(
            &cfg,
            &ReportArgs {
                detections,
                format,
                out,
            },
        ),
        Command::Fetch {
            address,
            endpoint,
            out,
        } => commands::fetch::run(
            &cfg,
            &FetchArgs {
                address,
                endpoint,
                out,
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(1, &e),
    }
}

/// One machine-parseable error line on stderr.
fn fail(code: u8, error: &anyhow::Error) -> ExitCode {
    let line = serde_json::json!({ "error": format!("{error:#}"), "code": code });
    eprintln!("{line}");
    ExitCode::from(code)
}
