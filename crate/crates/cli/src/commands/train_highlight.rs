use std::collections::HashMap;

use anyhow::{bail, Context, Result};
use solintent::artifact::read_jsonl;
use solintent::embed::Embedding;
use solintent::hash::{collapse_ws, fnv1a64_hex};
use solintent::highlight::{function_frequency, train_kmeans};

use crate::config::{verify_hash, PipelineConfig, Stage};
use crate::records::{
    group_by_address, EmbeddingRecord, KMeansFile, SnippetRecord, EMBEDDINGS_KIND, SNIPPETS_KIND,
};

use super::{ensure_parent, require_input};

pub fn run(cfg: &PipelineConfig, allow_mismatch: bool) -> Result<()> {
    require_input(&cfg.snippets, "extract")?;
    require_input(&cfg.embeddings, "embed")?;
    let (sh, snippets): (_, Vec<SnippetRecord>) = read_jsonl(&cfg.snippets, SNIPPETS_KIND)?;
    verify_hash(
        &cfg.snippets,
        &sh.config_hash,
        &cfg.stage_hash(Stage::Extract),
        allow_mismatch,
    )?;
    let (eh, embeddings): (_, Vec<EmbeddingRecord>) =
        read_jsonl(&cfg.embeddings, EMBEDDINGS_KIND)?;
    verify_hash(
        &cfg.embeddings,
        &eh.config_hash,
        &cfg.stage_hash(Stage::Embed),
        allow_mismatch,
    )?;

    // Occurrence frequency over the per-contract snippet sets.
    let per_contract = group_by_address(snippets, |s| &s.address);
    let contracts: Vec<Vec<solintent::extract::FunctionSnippet>> = per_contract
        .iter()
        .map(|(_, records)| {
            records
                .iter()
                .map(|r| solintent::extract::FunctionSnippet {
                    name: r.name.clone(),
                    owner: r.owner.clone(),
                    kind: r.kind,
                    text: r.text.clone(),
                    span: solintent::extract::Span { start: 0, end: 0 },
                })
                .collect()
        })
        .collect();
    let table = function_frequency(&contracts)?;

    // Seed centroids from the highest-frequency function texts, resolved to
    // their stored vectors by snippet key.
    let mut by_key: HashMap<&str, &EmbeddingRecord> = HashMap::new();
    for r in &embeddings {
        by_key.entry(r.key.as_str()).or_insert(r);
    }
    let mut seeds = Vec::new();
    for (text, _fraction) in table.top(cfg.kmeans.k_init) {
        let key = fnv1a64_hex(collapse_ws(&text).as_bytes());
        match by_key.get(key.as_str()) {
            Some(rec) => seeds.push(Embedding::new(rec.vector.clone())?),
            None => bail!(
                "frequency table text has no stored embedding (key {key}); \
                 snippets and embeddings artifacts are out of step"
            ),
        }
    }

    let points: Vec<Embedding> = embeddings
        .iter()
        .map(|r| Embedding::new(r.vector.clone()))
        .collect::<Result<_, _>>()?;

    let model = train_kmeans(&points, &cfg.kmeans, &seeds)?;
    ensure_parent(&cfg.kmeans_model)?;
    let file = KMeansFile {
        artifact: "kmeans".to_string(),
        version: 1,
        config_hash: cfg.stage_hash(Stage::TrainHighlight),
        model,
    };
    std::fs::write(&cfg.kmeans_model, serde_json::to_string(&file)?)
        .with_context(|| format!("cannot write {}", cfg.kmeans_model.display()))?;
    crate::out::line(format!(
        "train-highlight: k {} -> {} (rounds {}, final twcv {:.6})",
        file.model.k,
        cfg.kmeans_model.display(),
        file.model.twcv_history.len(),
        file.model.twcv_history.last().copied().unwrap_or(0.0)
    ));
    Ok(())
}

/// Read and hash-check the k-means model file.
pub fn load_kmeans(
    cfg: &PipelineConfig,
    allow_mismatch: bool,
) -> Result<solintent::highlight::KMeansModel> {
    require_input(&cfg.kmeans_model, "train-highlight")?;
    let text = std::fs::read_to_string(&cfg.kmeans_model)?;
    let file: KMeansFile = serde_json::from_str(&text)?;
    if file.artifact != "kmeans" {
        bail!(
            "{}: expected a kmeans artifact, found `{}`",
            cfg.kmeans_model.display(),
            file.artifact
        );
    }
    verify_hash(
        &cfg.kmeans_model,
        &file.config_hash,
        &cfg.stage_hash(Stage::TrainHighlight),
        allow_mismatch,
    )?;
    Ok(file.model)
}
