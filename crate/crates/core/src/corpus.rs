//! Dataset schema: the ten intent labels, labeled contracts, JSONL
//! persistence, deterministic splits, and an explorer-style fetch client.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// The closed set of developer-intent categories, in canonical order.
///
/// The discriminant order is the canonical order; it drives both the binary
/// label vector layout and serialization, and must never be reordered.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum IntentLabel {
    #[serde(rename = "fee")]
    Fee,
    #[serde(rename = "disableTrading")]
    DisableTrading,
    #[serde(rename = "blacklist")]
    Blacklist,
    #[serde(rename = "reflection")]
    Reflection,
    #[serde(rename = "maxTX")]
    MaxTx,
    #[serde(rename = "mint")]
    Mint,
    #[serde(rename = "honeypot")]
    Honeypot,
    #[serde(rename = "reward")]
    Reward,
    #[serde(rename = "rebase")]
    Rebase,
    #[serde(rename = "maxSell")]
    MaxSell,
}

impl IntentLabel {
    pub const COUNT: usize = 10;

    pub const ALL: [IntentLabel; IntentLabel::COUNT] = [
        IntentLabel::Fee,
        IntentLabel::DisableTrading,
        IntentLabel::Blacklist,
        IntentLabel::Reflection,
        IntentLabel::MaxTx,
        IntentLabel::Mint,
        IntentLabel::Honeypot,
        IntentLabel::Reward,
        IntentLabel::Rebase,
        IntentLabel::MaxSell,
    ];

    /// Position in the canonical ordering.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&l| l == self).expect("member of ALL")
    }

    pub fn from_index(i: usize) -> Option<IntentLabel> {
        Self::ALL.get(i).copied()
    }

    /// Canonical serialized name.
    pub fn name(self) -> &'static str {
        match self {
            IntentLabel::Fee => "fee",
            IntentLabel::DisableTrading => "disableTrading",
            IntentLabel::Blacklist => "blacklist",
            IntentLabel::Reflection => "reflection",
            IntentLabel::MaxTx => "maxTX",
            IntentLabel::Mint => "mint",
            IntentLabel::Honeypot => "honeypot",
            IntentLabel::Reward => "reward",
            IntentLabel::Rebase => "rebase",
            IntentLabel::MaxSell => "maxSell",
        }
    }
}

impl fmt::Display for IntentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntentLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

/// One smart contract source plus its (possibly empty) intent label set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledContract {
    pub address: String,
    pub source: String,
    pub labels: BTreeSet<IntentLabel>,
}

/// A train/test partition of a dataset; disjoint by address, union = input.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledContract>,
    pub test: Vec<LabeledContract>,
    pub seed: u64,
}

/// Load a JSONL dataset: one `{address, source, labels}` record per line.
///
/// Blank lines are rejected as malformed (the format is strictly one record
/// per line); an empty file is a valid empty dataset.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledContract>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in raw.lines().enumerate() {
        let lineno = idx + 1;
        let contract: LabeledContract = serde_json::from_str(line)
            .map_err(|e| Error::malformed(path, lineno, e.to_string()))?;
        if contract.address.is_empty() {
            return Err(Error::malformed(path, lineno, "empty address"));
        }
        if contract.source.is_empty() {
            return Err(Error::malformed(path, lineno, "empty source"));
        }
        if !seen.insert(contract.address.clone()) {
            return Err(Error::DuplicateAddress(contract.address));
        }
        out.push(contract);
    }
    Ok(out)
}

/// Write a dataset in the same JSONL format `load_dataset` reads.
pub fn write_dataset(path: impl AsRef<Path>, contracts: &[LabeledContract]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = String::new();
    for c in contracts {
        buf.push_str(&serde_json::to_string(c)?);
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Binary label vector of length 10 in canonical label order.
pub fn label_vector(labels: &BTreeSet<IntentLabel>) -> [f64; IntentLabel::COUNT] {
    let mut v = [0.0; IntentLabel::COUNT];
    for &l in labels {
        v[l.index()] = 1.0;
    }
    v
}

/// Inverse of [`label_vector`]: entries >= 0.5 are read as present.
pub fn labels_from_vector(v: &[f64]) -> BTreeSet<IntentLabel> {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x >= 0.5)
        .filter_map(|(i, _)| IntentLabel::from_index(i))
        .collect()
}

/// Deterministic shuffle split. `|test| = round(test_fraction * N)`; members
/// keep their input order within each side.
pub fn split_dataset(
    contracts: &[LabeledContract],
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if contracts.len() < 2 {
        return Err(Error::TooFewContracts {
            needed: 2,
            got: contracts.len(),
        });
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::BadFraction(test_fraction));
    }
    let n = contracts.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).shuffle(&mut indices);
    let mut test_idx: Vec<usize> = indices[..n_test].to_vec();
    let mut train_idx: Vec<usize> = indices[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok(DatasetSplit {
        train: train_idx.iter().map(|&i| contracts[i].clone()).collect(),
        test: test_idx.iter().map(|&i| contracts[i].clone()).collect(),
        seed,
    })
}

/// Configuration for the explorer fetch client.
#[derive(Debug, Clone)]
pub struct FetchConfig {
    /// URL template; every `{address}` occurrence is substituted.
    pub endpoint: String,
    pub timeout: Duration,
    /// Optional dotted path (e.g. `result.0.SourceCode`) to unwrap a JSON
    /// response body; `None` returns the body verbatim.
    pub json_path: Option<String>,
}

impl FetchConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        FetchConfig {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            json_path: None,
        }
    }
}

/// Fetch one contract source over HTTP. The body (or the configured JSON
/// path inside it) is returned verbatim; persisting it is the caller's job.
pub fn fetch_contract(address: &str, config: &FetchConfig) -> Result<String> {
    let url = config.endpoint.replace("{address}", address);
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .build()
        .into();
    let mut response = agent.get(&url).call().map_err(|e| match e {
        ureq::Error::StatusCode(code) => Error::FetchStatus {
            url: url.clone(),
            status: code,
        },
        other => Error::Fetch {
            url: url.clone(),
            message: other.to_string(),
        },
    })?;
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| Error::Fetch {
            url: url.clone(),
            message: e.to_string(),
        })?;
    let source = match &config.json_path {
        None => body,
        Some(path) => unwrap_json_path(&body, path).ok_or_else(|| Error::Fetch {
            url: url.clone(),
            message: format!("json path `{path}` not found in response"),
        })?,
    };
    if source.trim().is_empty() {
        return Err(Error::EmptySource { url });
    }
    Ok(source)
}

fn unwrap_json_path(body: &str, path: &str) -> Option<String> {
    let mut value: serde_json::Value = serde_json::from_str(body).ok()?;
    for segment in path.split('.') {
        value = match segment.parse::<usize>() {
            Ok(i) => value.get_mut(i)?.take(),
            Err(_) => value.get_mut(segment)?.take(),
        };
    }
    match value {
        serde_json::Value::String(s) => Some(s),
        other => Some(other.to_string()),
    }
}
