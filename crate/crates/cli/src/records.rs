//! On-disk record shapes for the JSONL and JSON pipeline artifacts.

use serde::{Deserialize, Serialize};
use solintent::extract::FunctionKind;
use solintent::highlight::KMeansModel;

pub const SNIPPETS_KIND: &str = "snippets";
pub const EMBEDDINGS_KIND: &str = "embeddings";
pub const HIGHLIGHTED_KIND: &str = "highlighted";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub address: String,
    pub owner: String,
    pub name: String,
    pub kind: FunctionKind,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub address: String,
    pub key: String,
    pub owner: String,
    pub name: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HighlightedRecord {
    pub address: String,
    pub key: String,
    pub owner: String,
    pub name: String,
    pub cluster: usize,
    pub distance: f64,
    pub scaled: bool,
    pub vector: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct KMeansFile {
    pub artifact: String,
    pub version: u32,
    pub config_hash: String,
    #[serde(flatten)]
    pub model: KMeansModel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelProb {
    pub label: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionStrength {
    pub owner: String,
    pub name: String,
    pub kind: FunctionKind,
    pub cluster: usize,
    pub distance: f64,
    pub scaled: bool,
}

/// One contract's detection outcome: ten label probabilities plus the
/// per-function intent strengths in descending order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Detection {
    pub address: String,
    pub probabilities: Vec<LabelProb>,
    pub positives: Vec<String>,
    pub functions: Vec<FunctionStrength>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DetectionsFile {
    pub artifact: String,
    pub version: u32,
    pub config_hash: String,
    pub threshold: f64,
    pub results: Vec<Detection>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsFile {
    pub artifact: String,
    pub version: u32,
    pub config_hash: String,
    pub threshold: f64,
    pub reports: Vec<solintent::evalx::MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<solintent::evalx::Comparison>,
}

/// Group flat per-function records back into per-contract row lists,
/// keeping both contract order and row order as written.
pub fn group_by_address<R, K: Fn(&R) -> &str>(records: Vec<R>, key: K) -> Vec<(String, Vec<R>)> {
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut out: Vec<(String, Vec<R>)> = Vec::new();
    for rec in records {
        let address = key(&rec).to_string();
        match index.get(&address) {
            Some(&i) => out[i].1.push(rec),
            None => {
                index.insert(address.clone(), out.len());
                out.push((address, vec![rec]));
            }
        }
    }
    out
}
