//! Function embeddings and the cosine geometry shared downstream.
//!
//! The encoder is pluggable: [`HashEncoder`] is the built-in deterministic
//! feature-hashing encoder, [`FileEncoder`] serves precomputed vectors
//! produced by an external sentence encoder and imported from JSONL.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::FunctionSnippet;
use crate::hash::{collapse_ws, fnv1a64, fnv1a64_seeded, snippet_key};

/// A fixed-dimension real vector representing one function's context.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Wrap raw values; entries must be finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "embedding values".to_string(),
            });
        }
        Ok(Embedding { values })
    }

    /// Wrap and L2-normalize. Errors on a zero vector.
    pub fn unit(values: Vec<f64>) -> Result<Self> {
        let mut e = Embedding::new(values)?;
        e.normalize()?;
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-9
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        for v in &mut self.values {
            *v /= n;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Embedding {
        Embedding {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Embedding::new(values).map_err(serde::de::Error::custom)
    }
}

/// The n x m matrix of one contract's function embeddings, rows in
/// extraction order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: Vec<Embedding>,
    m: usize,
}

impl EmbeddingMatrix {
    pub fn new(rows: Vec<Embedding>, m: usize) -> Result<Self> {
        for r in &rows {
            if r.dim() != m {
                return Err(Error::DimMismatch {
                    expected: m,
                    got: r.dim(),
                });
            }
        }
        Ok(EmbeddingMatrix { rows, m })
    }

    pub fn empty(m: usize) -> Self {
        EmbeddingMatrix { rows: Vec::new(), m }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[Embedding] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Embedding {
        &self.rows[i]
    }

    pub fn push(&mut self, row: Embedding) -> Result<()> {
        if row.dim() != self.m {
            return Err(Error::DimMismatch {
                expected: self.m,
                got: row.dim(),
            });
        }
        self.rows.push(row);
        Ok(())
    }
}

/// Anything that maps function text to a fixed-dimension embedding.
/// Implementations must be deterministic: same text, same vector.
pub trait Encoder {
    fn dim(&self) -> usize;
    fn encode(&self, text: &str) -> Result<Embedding>;
}

/// Deterministic feature-hashing encoder.
///
/// Code tokens are split into camelCase/snake_case subtokens; each subtoken
/// lands in an FNV-1a bucket with a +/-1 contribution decided by a second,
/// seed-mixed FNV pass; the result is L2-normalized.
#[derive(Debug, Clone)]
pub struct HashEncoder {
    dim: usize,
    seed: u64,
}

impl HashEncoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::BadDimension(dim));
        }
        Ok(HashEncoder { dim, seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Encoder for HashEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Embedding> {
        hash_encode(text, self.dim, self.seed)
    }
}

/// Feature-hash one function text into an m-dimensional unit vector.
pub fn hash_encode(text: &str, m: usize, seed: u64) -> Result<Embedding> {
    if m < 2 {
        return Err(Error::BadDimension(m));
    }
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let mut acc = vec![0.0f64; m];
    let mut any = false;
    for token in subtokens(text) {
        any = true;
        let bucket = (fnv1a64(token.as_bytes()) % m as u64) as usize;
        let sign = if fnv1a64_seeded(seed, token.as_bytes()) & 1 == 1 {
            1.0
        } else {
            -1.0
        };
        acc[bucket] += sign;
    }
    if !any {
        return Err(Error::EmptyText);
    }
    Embedding::unit(acc).map_err(|e| match e {
        Error::ZeroVector => Error::ZeroEmbedding,
        other => other,
    })
}

/// Split code into hashable subtokens: identifier runs are broken on `_`/`$`
/// and camelCase boundaries and lowercased; every other non-whitespace char
/// stands alone.
fn subtokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut ident = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            ident.push(c);
        } else {
            split_ident(&ident, &mut out);
            ident.clear();
            if !c.is_whitespace() && c != '_' && c != '$' {
                out.push(c.to_string());
            }
        }
    }
    split_ident(&ident, &mut out);
    out
}

fn split_ident(ident: &str, out: &mut Vec<String>) {
    if ident.is_empty() {
        return;
    }
    let chars: Vec<char> = ident.chars().collect();
    let mut start = 0;
    for i in 1..chars.len() {
        let prev = chars[i - 1];
        let cur = chars[i];
        let camel = prev.is_lowercase() && cur.is_uppercase();
        // Acronym boundary: "TXLimit" -> "TX" + "Limit".
        let acronym = prev.is_uppercase()
            && cur.is_uppercase()
            && i + 1 < chars.len()
            && chars[i + 1].is_lowercase();
        let digit_edge = prev.is_ascii_digit() != cur.is_ascii_digit();
        if camel || acronym || digit_edge {
            out.push(chars[start..i].iter().collect::<String>().to_lowercase());
            start = i;
        }
    }
    out.push(chars[start..].iter().collect::<String>().to_lowercase());
}

/// Lookup encoder over vectors computed offline by an external encoder.
/// Keys are [`snippet_key`] digests of whitespace-collapsed snippet text.
#[derive(Debug, Clone)]
pub struct FileEncoder {
    map: HashMap<String, Embedding>,
    dim: usize,
}

impl FileEncoder {
    pub fn from_path(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let map = import_embeddings(path, dim)?;
        Ok(FileEncoder { map, dim })
    }

    pub fn from_map(map: HashMap<String, Embedding>, dim: usize) -> Result<Self> {
        for (k, v) in &map {
            if v.dim() != dim {
                return Err(Error::MissingEmbedding {
                    key: k.clone(),
                    context: format!("dimension {} != {}", v.dim(), dim),
                });
            }
        }
        Ok(FileEncoder { map, dim })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl Encoder for FileEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<Embedding> {
        let key = snippet_key(text);
        self.map
            .get(&key)
            .cloned()
            .ok_or_else(|| Error::MissingEmbedding {
                key,
                context: format!(
                    "text starts with `{}`",
                    collapse_ws(text).chars().take(40).collect::<String>()
                ),
            })
    }
}

#[derive(Serialize, Deserialize)]
struct EmbeddingRecord {
    key: String,
    vector: Vec<f64>,
}

/// Import precomputed embeddings from a `{key, vector}` JSONL file.
/// Vectors are re-normalized on load.
pub fn import_embeddings(
    path: impl AsRef<Path>,
    m: usize,
) -> Result<HashMap<String, Embedding>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (idx, line) in raw.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord = serde_json::from_str(line)
            .map_err(|e| Error::malformed(path, lineno, e.to_string()))?;
        if rec.vector.len() != m {
            return Err(Error::malformed(
                path,
                lineno,
                format!("dimension {} != expected {}", rec.vector.len(), m),
            ));
        }
        if rec.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::malformed(path, lineno, "non-finite entry"));
        }
        let emb = Embedding::unit(rec.vector)
            .map_err(|e| Error::malformed(path, lineno, e.to_string()))?;
        if map.insert(rec.key.clone(), emb).is_some() {
            return Err(Error::DuplicateKey(rec.key));
        }
    }
    Ok(map)
}

/// Write a `{key, vector}` JSONL embedding file (keys sorted for stable
/// output).
pub fn export_embeddings(
    path: impl AsRef<Path>,
    map: &HashMap<String, Embedding>,
) -> Result<()> {
    let path = path.as_ref();
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    let mut buf = String::new();
    for key in keys {
        let rec = EmbeddingRecord {
            key: key.clone(),
            vector: map[key].as_slice().to_vec(),
        };
        buf.push_str(&serde_json::to_string(&rec)?);
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Embed every function of one contract, rows in input order.
pub fn embed_contract(
    functions: &[FunctionSnippet],
    encoder: &dyn Encoder,
) -> Result<EmbeddingMatrix> {
    let mut matrix = EmbeddingMatrix::empty(encoder.dim());
    for f in functions {
        let row = encoder.encode(&f.text).map_err(|e| Error::EncodeFunction {
            name: if f.name.is_empty() {
                format!("{:?}", f.kind)
            } else {
                f.name.clone()
            },
            source: Box::new(e),
        })?;
        matrix.push(row)?;
    }
    Ok(matrix)
}

/// Cosine of the angle between two embeddings: `(a . b) / (|a| |b|)`.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .sum();
    Ok(dot / (na * nb))
}

/// Cosine distance `1 - cos<a, b>`, in [0, 2].
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(values: &[f64]) -> Embedding {
        Embedding::new(values.to_vec()).unwrap()
    }

    #[test]
    fn hash_encode_is_deterministic() {
        let a = hash_encode("function f() { return 1; }", 64, 9).unwrap();
        let b = hash_encode("function f() { return 1; }", 64, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hash_encode_output_is_unit_norm() {
        for text in ["function transfer(address to) {}", "x", "a b c d e f"] {
            let e = hash_encode(text, 32, 0).unwrap();
            assert!((e.norm() - 1.0).abs() < 1e-9, "norm for {text:?}");
            assert!(e.is_unit());
        }
    }

    #[test]
    fn hash_encode_ignores_whitespace() {
        let a = hash_encode("function  f( ) {\n\treturn 1; }", 64, 3).unwrap();
        let b = hash_encode("function f() { return 1; }", 64, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hash_encode_rejects_empty_text() {
        assert!(matches!(hash_encode("   ", 16, 0), Err(Error::EmptyText)));
    }

    #[test]
    fn hash_encode_rejects_tiny_dimension() {
        assert!(matches!(
            hash_encode("x", 1, 0),
            Err(Error::BadDimension(1))
        ));
    }

    #[test]
    fn subtokens_split_camel_and_snake_case() {
        let toks = subtokens("changeTax max_TXLimit erc20");
        assert_eq!(
            toks,
            ["change", "tax", "max", "tx", "limit", "erc", "20"]
        );
    }

    #[test]
    fn different_seeds_give_different_vectors() {
        let a = hash_encode("function f() { g(); }", 64, 1).unwrap();
        let b = hash_encode("function f() { g(); }", 64, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn embed_contract_shapes() {
        let enc = HashEncoder::new(16, 0).unwrap();
        let fns: Vec<FunctionSnippet> = ["function a() {1;}", "function b() {2;}", "function c() {3;}"]
            .iter()
            .enumerate()
            .map(|(i, t)| FunctionSnippet {
                name: format!("f{i}"),
                owner: "C".to_string(),
                kind: crate::extract::FunctionKind::Function,
                text: t.to_string(),
                span: crate::extract::Span { start: 0, end: 0 },
            })
            .collect();
        let x = embed_contract(&fns, &enc).unwrap();
        assert_eq!(x.n(), 3);
        assert_eq!(x.m(), 16);

        let empty = embed_contract(&[], &enc).unwrap();
        assert_eq!(empty.n(), 0);

        // Permuting inputs permutes rows identically.
        let mut rev = fns.clone();
        rev.reverse();
        let y = embed_contract(&rev, &enc).unwrap();
        assert_eq!(y.row(0), x.row(2));
        assert_eq!(y.row(2), x.row(0));
    }

    #[test]
    fn cosine_similarity_basics() {
        let e1 = emb(&[1.0, 0.0]);
        let e2 = emb(&[0.0, 1.0]);
        let e3 = emb(&[1.0, 1.0]);
        assert!((cosine_similarity(&e1, &e1).unwrap() - 1.0).abs() < 1e-12);
        assert!(cosine_similarity(&e1, &e2).unwrap().abs() < 1e-12);
        // Analytic 1/sqrt(2) = 0.7071067812...
        assert!(
            (cosine_similarity(&e1, &e3).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs()
                < 1e-9
        );
    }

    #[test]
    fn cosine_distance_basics() {
        let e1 = emb(&[1.0, 0.0]);
        let e2 = emb(&[0.0, 1.0]);
        let neg = emb(&[-1.0, 0.0]);
        assert_eq!(cosine_distance(&e1, &e1).unwrap(), 0.0);
        assert!((cosine_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_distance(&e1, &neg).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_rejects_zero_and_mismatched_vectors() {
        let z = emb(&[0.0, 0.0]);
        let e = emb(&[1.0, 0.0]);
        assert!(matches!(cosine_similarity(&z, &e), Err(Error::ZeroVector)));
        let e3 = emb(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            cosine_similarity(&e, &e3),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn import_export_roundtrip() {
        let mut path = std::env::temp_dir();
        path.push(format!("solintent-embed-rt-{}.jsonl", std::process::id()));
        let mut map = HashMap::new();
        map.insert("k1".to_string(), Embedding::unit(vec![1.0, 2.0, 2.0]).unwrap());
        map.insert("k2".to_string(), Embedding::unit(vec![-1.0, 0.0, 1.0]).unwrap());
        export_embeddings(&path, &map).unwrap();
        let loaded = import_embeddings(&path, 3).unwrap();
        assert_eq!(loaded.len(), 2);
        for (k, v) in &map {
            let l = &loaded[k];
            for (a, b) in v.as_slice().iter().zip(l.as_slice()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn import_reports_dimension_mismatch_line() {
        let mut path = std::env::temp_dir();
        path.push(format!("solintent-embed-dim-{}.jsonl", std::process::id()));
        std::fs::write(
            &path,
            "{\"key\":\"a\",\"vector\":[1.0,0.0,0.0]}\n{\"key\":\"b\",\"vector\":[1.0,0.0]}\n",
        )
        .unwrap();
        let err = import_embeddings(&path, 3).unwrap_err().to_string();
        assert!(err.contains(":2:"), "should cite line 2: {err}");
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn import_rejects_duplicate_keys() {
        let mut path = std::env::temp_dir();
        path.push(format!("solintent-embed-dup-{}.jsonl", std::process::id()));
        std::fs::write(
            &path,
            "{\"key\":\"a\",\"vector\":[1.0,0.0]}\n{\"key\":\"a\",\"vector\":[0.0,1.0]}\n",
        )
        .unwrap();
        assert!(matches!(
            import_embeddings(&path, 2),
            Err(Error::DuplicateKey(k)) if k == "a"
        ));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn file_encoder_looks_up_by_collapsed_text() {
        let text = "function f() {\n  return 1;\n}";
        let key = snippet_key(text);
        let mut map = HashMap::new();
        map.insert(key, emb(&[0.6, 0.8]));
        let enc = FileEncoder::from_map(map, 2).unwrap();
        // Reformatted text resolves to the same vector.
        let e = enc.encode("function f() { return 1; }").unwrap();
        assert_eq!(e.as_slice(), &[0.6, 0.8]);
        assert!(enc.encode("function g() {}").is_err());
    }
}
