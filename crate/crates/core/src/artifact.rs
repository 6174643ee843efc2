//! Self-describing pipeline artifacts.
//!
//! Every produced artifact embeds the hash of the configuration that made
//! it. JSONL artifacts carry a header line; JSON artifacts carry the same
//! fields at the top level. Downstream stages compare recorded hashes
//! against the current configuration before consuming an input.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub artifact: String,
    pub version: u32,
    pub config_hash: String,
}

impl ArtifactHeader {
    pub fn new(artifact: impl Into<String>, config_hash: impl Into<String>) -> Self {
        ArtifactHeader {
            artifact: artifact.into(),
            version: 1,
            config_hash: config_hash.into(),
        }
    }
}

/// Write a JSONL artifact: header line first, then one record per line.
pub fn write_jsonl<T: Serialize>(
    path: impl AsRef<Path>,
    header: &ArtifactHeader,
    records: &[T],
) -> Result<()> {
    let path = path.as_ref();
    let mut buf = serde_json::to_string(header)?;
    buf.push('\n');
    for r in records {
        buf.push_str(&serde_json::to_string(r)?);
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Read a JSONL artifact, checking the header's artifact kind. Returns the
/// header and the parsed records.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(
    path: impl AsRef<Path>,
    expected_kind: &str,
) -> Result<(ArtifactHeader, Vec<T>)> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = raw.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::malformed(path, 1, "missing artifact header"))?;
    let header: ArtifactHeader = serde_json::from_str(first)
        .map_err(|e| Error::malformed(path, 1, format!("bad artifact header: {e}")))?;
    if header.artifact != expected_kind {
        return Err(Error::WrongArtifact {
            path: path.to_path_buf(),
            expected: expected_kind.to_string(),
            found: header.artifact,
        });
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(line)
            .map_err(|e| Error::malformed(path, idx + 1, e.to_string()))?;
        records.push(rec);
    }
    Ok((header, records))
}
