use std::collections::HashMap;

use anyhow::{bail, Context, Result};
use solintent::artifact::read_jsonl;
use solintent::corpus::{label_vector, load_dataset};
use solintent::embed::{Embedding, EmbeddingMatrix};
use solintent::nn::{train, IntentModel};

use crate::config::{verify_hash, PipelineConfig, Stage};
use crate::records::{group_by_address, HighlightedRecord, HIGHLIGHTED_KIND};

use super::{ensure_parent, require_input};

pub fn run(cfg: &PipelineConfig, allow_mismatch: bool) -> Result<()> {
    require_input(&cfg.dataset, "fetch (or provide a dataset)")?;
    require_input(&cfg.highlighted, "highlight")?;
    let (hh, rows): (_, Vec<HighlightedRecord>) = read_jsonl(&cfg.highlighted, HIGHLIGHTED_KIND)?;
    verify_hash(
        &cfg.highlighted,
        &hh.config_hash,
        &cfg.stage_hash(Stage::Highlight),
        allow_mismatch,
    )?;

    let dataset = load_dataset(&cfg.dataset)?;
    let labels_by_address: HashMap<&str, [f64; 10]> = dataset
        .iter()
        .map(|c| (c.address.as_str(), label_vector(&c.labels)))
        .collect();

    let mut data: Vec<(EmbeddingMatrix, Vec<f64>)> = Vec::new();
    for (address, rows) in group_by_address(rows, |r| &r.address) {
        let Some(target) = labels_by_address.get(address.as_str()) else {
            bail!("highlighted artifact mentions `{address}`, which is not in the dataset");
        };
        let matrix = EmbeddingMatrix::new(
            rows.iter()
                .map(|r| Embedding::new(r.vector.clone()))
                .collect::<Result<_, _>>()?,
            cfg.dim,
        )?;
        data.push((matrix, target.to_vec()));
    }

    let mut model = IntentModel::new(cfg.model_config(), cfg.model_seed)?;
    let report = train(&mut model, &data, &cfg.train)?;

    ensure_parent(&cfg.weights)?;
    std::fs::write(
        &cfg.weights,
        model.to_json(Some(&cfg.stage_hash(Stage::Train)))?,
    )
    .with_context(|| format!("cannot write {}", cfg.weights.display()))?;

    ensure_parent(&cfg.train_log)?;
    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in report.epoch_loss.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", epoch + 1, loss));
    }
    std::fs::write(&cfg.train_log, csv)
        .with_context(|| format!("cannot write {}", cfg.train_log.display()))?;

    crate::out::line(format!(
        "train: {} contracts, {} epochs, final loss {:.6} -> {}",
        data.len(),
        report.epoch_loss.len(),
        report.epoch_loss.last().copied().unwrap_or(f64::NAN),
        cfg.weights.display()
    ));
    Ok(())
}

/// Read and hash-check a weights file; returns the model.
pub fn load_weights(
    path: &std::path::Path,
    cfg: &PipelineConfig,
    allow_mismatch: bool,
) -> Result<IntentModel> {
    if !path.exists() {
        bail!(
            "missing input artifact {}; run `solintent train` first",
            path.display()
        );
    }
    let text = std::fs::read_to_string(path)?;
    let (model, recorded) = IntentModel::from_json(&text)?;
    if let Some(recorded) = recorded {
        verify_hash(path, &recorded, &cfg.stage_hash(Stage::Train), allow_mismatch)?;
    }
    if model.config.feature_dim != cfg.dim {
        bail!(
            "{}: weights expect feature dim {}, configuration says {}",
            path.display(),
            model.config.feature_dim,
            cfg.dim
        );
    }
    Ok(model)
}
