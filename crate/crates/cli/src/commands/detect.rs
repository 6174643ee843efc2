use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use solintent::corpus::{load_dataset, IntentLabel};
use solintent::embed::{embed_contract, EmbeddingMatrix};
use solintent::extract::{
    dedupe_functions, extract_functions_with, normalize_source, ExtractOptions, FunctionSnippet,
};
use solintent::highlight::{highlight, KMeansModel};
use solintent::nn::{predict, IntentModel};

use crate::config::{PipelineConfig, Stage};
use crate::records::{Detection, DetectionsFile, FunctionStrength, LabelProb};

use super::ensure_parent;

pub struct DetectArgs {
    pub source: Option<PathBuf>,
    pub address: Option<String>,
    pub out: Option<PathBuf>,
}

/// Run the full pipeline on one contract and report label probabilities
/// plus the function strength ranking (strongest first).
pub fn run(cfg: &PipelineConfig, args: &DetectArgs, allow_mismatch: bool) -> Result<()> {
    let (address, source) = resolve_input(cfg, args)?;
    let kmeans = super::train_highlight::load_kmeans(cfg, allow_mismatch)?;
    let model = super::train::load_weights(&cfg.weights, cfg, allow_mismatch)?;
    let encoder = super::embed::make_encoder(cfg)?;

    let detection = detect_one(cfg, &kmeans, &model, encoder.as_ref(), &address, &source)?;
    let file = DetectionsFile {
        artifact: "detections".to_string(),
        version: 1,
        config_hash: cfg.stage_hash(Stage::Detect),
        threshold: cfg.threshold,
        results: vec![detection],
    };

    let json = serde_json::to_string_pretty(&file)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.detections.clone());
    ensure_parent(&out)?;
    std::fs::write(&out, &json)
        .with_context(|| format!("cannot write {}", out.display()))?;
    // The artifact is already on disk; a closed pipe downstream is fine.
    crate::out::line(&json);
    Ok(())
}

fn resolve_input(cfg: &PipelineConfig, args: &DetectArgs) -> Result<(String, String)> {
    match (&args.source, &args.address) {
        (Some(path), _) => {
            let source = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read contract source {}", path.display()))?;
            let address = args
                .address
                .clone()
                .unwrap_or_else(|| file_stem(path));
            Ok((address, source))
        }
        (None, Some(address)) => {
            let dataset = load_dataset(&cfg.dataset)?;
            let contract = dataset
                .into_iter()
                .find(|c| &c.address == address)
                .ok_or_else(|| {
                    anyhow::anyhow!("address `{address}` not found in {}", cfg.dataset.display())
                })?;
            Ok((contract.address, contract.source))
        }
        (None, None) => bail!("detect needs --source <file> or --address <addr>"),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn detect_one(
    cfg: &PipelineConfig,
    kmeans: &KMeansModel,
    model: &IntentModel,
    encoder: &dyn solintent::embed::Encoder,
    address: &str,
    source: &str,
) -> Result<Detection> {
    let normalized = normalize_source(source)?.with_provenance(address);
    let options = ExtractOptions {
        include_special_units: cfg.include_special_units,
    };
    let functions: Vec<FunctionSnippet> =
        dedupe_functions(extract_functions_with(&normalized, &options)?);
    let x: EmbeddingMatrix = embed_contract(&functions, encoder)?;
    let out = highlight(kmeans, &x, &cfg.highlight)?;
    let y = predict(model, &out.matrix)?;

    let probabilities: Vec<LabelProb> = IntentLabel::ALL
        .iter()
        .zip(&y)
        .map(|(l, &p)| LabelProb {
            label: l.name().to_string(),
            probability: p,
        })
        .collect();
    let positives: Vec<String> = probabilities
        .iter()
        .filter(|lp| lp.probability >= cfg.threshold)
        .map(|lp| lp.label.clone())
        .collect();

    let mut ranked: Vec<FunctionStrength> = functions
        .iter()
        .zip(&out.strengths)
        .map(|(f, s)| FunctionStrength {
            owner: f.owner.clone(),
            name: f.name.clone(),
            kind: f.kind,
            cluster: s.cluster,
            distance: s.distance,
            scaled: s.scaled,
        })
        .collect();
    // Strongest intent first; ties keep extraction order (stable sort).
    ranked.sort_by(|a, b| b.distance.partial_cmp(&a.distance).unwrap());

    Ok(Detection {
        address: address.to_string(),
        probabilities,
        positives,
        functions: ranked,
    })
}
