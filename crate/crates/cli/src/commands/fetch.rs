use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use solintent::corpus::{fetch_contract, load_dataset, FetchConfig, LabeledContract};

use crate::config::PipelineConfig;

use super::ensure_parent;

pub const ENDPOINT_ENV: &str = "SOLINTENT_FETCH_ENDPOINT";

pub struct FetchArgs {
    pub address: String,
    pub endpoint: Option<String>,
    pub out: Option<PathBuf>,
}

/// Fetch one contract source. With `--out`, append it to a dataset file as
/// an unlabeled record; otherwise print the raw source.
pub fn run(cfg: &PipelineConfig, args: &FetchArgs) -> Result<()> {
    let endpoint = args
        .endpoint
        .clone()
        .or_else(|| std::env::var(ENDPOINT_ENV).ok())
        .or_else(|| cfg.fetch_endpoint.clone());
    let Some(endpoint) = endpoint else {
        bail!(
            "no fetch endpoint configured; pass --endpoint, set fetch.endpoint, or export {ENDPOINT_ENV}"
        );
    };

    let fetch_cfg = FetchConfig {
        endpoint,
        timeout: Duration::from_secs(cfg.fetch_timeout_secs),
        json_path: cfg.fetch_json_path.clone(),
    };
    let source = fetch_contract(&args.address, &fetch_cfg)?;

    match &args.out {
        None => {
            crate::out::line(&source);
        }
        Some(path) => {
            if path.exists() {
                let existing = load_dataset(path)?;
                if existing.iter().any(|c| c.address == args.address) {
                    bail!(
                        "{} already contains address `{}`",
                        path.display(),
                        args.address
                    );
                }
            } else {
                ensure_parent(path)?;
            }
            let record = LabeledContract {
                address: args.address.clone(),
                source,
                labels: Default::default(),
            };
            let mut f = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .with_context(|| format!("cannot open {}", path.display()))?;
            writeln!(f, "{}", serde_json::to_string(&record)?)?;
            crate::out::line(format!("fetch: {} -> {}", args.address, path.display()));
        }
    }
    Ok(())
}
