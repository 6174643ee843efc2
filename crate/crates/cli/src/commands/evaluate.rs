use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use solintent::artifact::read_jsonl;
use solintent::corpus::{label_vector, load_dataset};
use solintent::embed::{Embedding, EmbeddingMatrix};
use solintent::evalx::{compare_models, confusion, metrics, MetricsReport};
use solintent::nn::{predict, Variant};

use crate::config::{verify_hash, PipelineConfig, Stage};
use crate::records::{group_by_address, HighlightedRecord, MetricsFile, HIGHLIGHTED_KIND};

use super::{ensure_parent, require_input};

pub struct EvaluateArgs {
    pub dataset: Option<PathBuf>,
    pub weights: Vec<PathBuf>,
    pub csv: Option<PathBuf>,
}

pub fn run(cfg: &PipelineConfig, args: &EvaluateArgs, allow_mismatch: bool) -> Result<()> {
    let dataset_path = args.dataset.clone().unwrap_or_else(|| cfg.dataset.clone());
    require_input(&dataset_path, "fetch (or provide a dataset)")?;
    require_input(&cfg.highlighted, "highlight")?;

    let (hh, rows): (_, Vec<HighlightedRecord>) = read_jsonl(&cfg.highlighted, HIGHLIGHTED_KIND)?;
    verify_hash(
        &cfg.highlighted,
        &hh.config_hash,
        &cfg.stage_hash(Stage::Highlight),
        allow_mismatch,
    )?;

    let dataset = load_dataset(&dataset_path)?;
    let matrices: HashMap<String, EmbeddingMatrix> = group_by_address(rows, |r| &r.address)
        .into_iter()
        .map(|(address, rows)| {
            let m = EmbeddingMatrix::new(
                rows.iter()
                    .map(|r| Embedding::new(r.vector.clone()))
                    .collect::<Result<_, _>>()?,
                cfg.dim,
            )?;
            Ok((address, m))
        })
        .collect::<Result<_>>()?;

    let weight_paths = if args.weights.is_empty() {
        vec![cfg.weights.clone()]
    } else {
        args.weights.clone()
    };

    let mut reports: Vec<MetricsReport> = Vec::new();
    for path in &weight_paths {
        let model = super::train::load_weights(path, cfg, allow_mismatch)?;
        let mut predictions = Vec::with_capacity(dataset.len());
        let mut targets = Vec::with_capacity(dataset.len());
        for contract in &dataset {
            let Some(x) = matrices.get(&contract.address) else {
                bail!(
                    "dataset contract `{}` has no rows in {}; re-run the pipeline on this dataset",
                    contract.address,
                    cfg.highlighted.display()
                );
            };
            predictions.push(predict(&model, x)?);
            targets.push(label_vector(&contract.labels).to_vec());
        }
        let counts = confusion(&predictions, &targets, cfg.threshold)?;
        let mut report = metrics(&counts)?;
        report.model = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        report.variant = variant_id(model.config.variant, cfg.highlight.mu);
        crate::out::line(format!(
            "evaluate[{} {}]: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
            report.model, report.variant, report.accuracy, report.precision, report.recall, report.f1
        ));
        reports.push(report);
    }

    let comparison = compare_models(&reports)?;
    crate::out::line(comparison.render_text());

    if let Some(csv_path) = &args.csv {
        ensure_parent(csv_path)?;
        let mut csv = String::from("model,variant,accuracy,precision,recall,f1\n");
        for r in &reports {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.model, r.variant, r.accuracy, r.precision, r.recall, r.f1
            ));
        }
        std::fs::write(csv_path, csv)
            .with_context(|| format!("cannot write {}", csv_path.display()))?;
    }

    ensure_parent(&cfg.metrics)?;
    let file = MetricsFile {
        artifact: "metrics".to_string(),
        version: 1,
        config_hash: cfg.stage_hash(Stage::Detect),
        threshold: cfg.threshold,
        reports,
        comparison: Some(comparison),
    };
    std::fs::write(&cfg.metrics, serde_json::to_string_pretty(&file)?)
        .with_context(|| format!("cannot write {}", cfg.metrics.display()))?;
    crate::out::line(format!("evaluate: report -> {}", cfg.metrics.display()));
    Ok(())
}

/// Variant identifier for grouping: the full system is the BiLSTM over
/// highlight-scaled input, named by its scale factor; everything else (and
/// scale 1, which is the identity) reports as a plain baseline.
fn variant_id(variant: Variant, mu: f64) -> String {
    match variant {
        Variant::Bilstm if mu != 1.0 => format!("scale_x{}", format_mu(mu)),
        other => other.to_string(),
    }
}

fn format_mu(mu: f64) -> String {
    if mu.fract() == 0.0 {
        format!("{}", mu as i64)
    } else {
        format!("{mu}")
    }
}
