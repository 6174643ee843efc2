//! Plain-text `key=value` pipeline configuration with flag overrides, plus
//! the per-stage config hashes embedded in every produced artifact.
//!
//! A stage hash covers exactly the parameters that influence that stage's
//! output (cumulatively along the pipeline), so renaming an output path
//! never invalidates artifacts but changing, say, the encoder seed does.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use solintent::hash::{fnv1a64_hex, fnv1a64};
use solintent::highlight::{HighlightConfig, KMeansConfig};
use solintent::nn::{ModelConfig, TrainConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Hash,
    File,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    // Artifact paths.
    pub dataset: PathBuf,
    pub snippets: PathBuf,
    pub embeddings: PathBuf,
    pub highlighted: PathBuf,
    pub kmeans_model: PathBuf,
    pub weights: PathBuf,
    pub detections: PathBuf,
    pub metrics: PathBuf,
    pub train_log: PathBuf,
    pub report: PathBuf,
    // Extraction.
    pub include_special_units: bool,
    // Encoder.
    pub encoder: EncoderKind,
    pub encoder_file: Option<PathBuf>,
    pub dim: usize,
    pub encoder_seed: u64,
    // Clustering and highlighting.
    pub kmeans: KMeansConfig,
    pub highlight: HighlightConfig,
    // Classifier.
    pub variant: Variant,
    pub max_functions: usize,
    pub hidden: usize,
    pub model_seed: u64,
    pub train: TrainConfig,
    // Decision threshold.
    pub threshold: f64,
    // Fetch client.
    pub fetch_endpoint: Option<String>,
    pub fetch_timeout_secs: u64,
    pub fetch_json_path: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: "data/contracts.jsonl".into(),
            snippets: "out/snippets.jsonl".into(),
            embeddings: "out/embeddings.jsonl".into(),
            highlighted: "out/highlighted.jsonl".into(),
            kmeans_model: "out/kmeans.json".into(),
            weights: "out/weights.json".into(),
            detections: "out/detections.json".into(),
            metrics: "out/metrics.json".into(),
            train_log: "out/train_log.csv".into(),
            report: "out/report.html".into(),
            include_special_units: true,
            encoder: EncoderKind::Hash,
            encoder_file: None,
            dim: 512,
            encoder_seed: 0,
            kmeans: KMeansConfig::default(),
            highlight: HighlightConfig::default(),
            variant: Variant::Bilstm,
            max_functions: 256,
            hidden: 64,
            model_seed: 0,
            train: TrainConfig::default(),
            threshold: 0.5,
            fetch_endpoint: None,
            fetch_timeout_secs: 30,
            fetch_json_path: None,
        }
    }
}

/// Pipeline stages with a hashed parameter scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Extract,
    Embed,
    TrainHighlight,
    Highlight,
    Train,
    Detect,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    anyhow!("{}:{}: expected key=value, got `{line}`", path.display(), idx + 1)
                })?;
                cfg.apply(key.trim(), strip_inline_comment(value).trim())
                    .with_context(|| format!("{}:{}", path.display(), idx + 1))?;
            }
        }
        for entry in overrides {
            let (key, value) = entry
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects key=value, got `{entry}`"))?;
            cfg.apply(key.trim(), value.trim())
                .with_context(|| format!("--set {entry}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow!("bad value for {key}: {e}"))
        }
        match key {
            "dataset" => self.dataset = value.into(),
            "snippets" => self.snippets = value.into(),
            "embeddings" => self.embeddings = value.into(),
            "highlighted" => self.highlighted = value.into(),
            "kmeans_model" => self.kmeans_model = value.into(),
            "weights" => self.weights = value.into(),
            "detections" => self.detections = value.into(),
            "metrics" => self.metrics = value.into(),
            "train_log" => self.train_log = value.into(),
            "report" => self.report = value.into(),
            "extract.include_special" => self.include_special_units = num(key, value)?,
            "encoder" => {
                self.encoder = match value {
                    "hash" => EncoderKind::Hash,
                    "file" => EncoderKind::File,
                    other => bail!("encoder must be `hash` or `file`, got `{other}`"),
                }
            }
            "encoder_file" => self.encoder_file = Some(value.into()),
            "dim" => self.dim = num(key, value)?,
            "encoder_seed" => self.encoder_seed = num(key, value)?,
            "kmeans.k_init" => self.kmeans.k_init = num(key, value)?,
            "kmeans.max_rounds" => self.kmeans.max_rounds = num(key, value)?,
            "kmeans.tolerance" => self.kmeans.tolerance = num(key, value)?,
            "kmeans.seed" => self.kmeans.seed = num(key, value)?,
            "highlight.lambda" => self.highlight.lambda = num(key, value)?,
            "highlight.mu" => self.highlight.mu = num(key, value)?,
            "model.variant" => {
                self.variant = match value {
                    "bilstm" => Variant::Bilstm,
                    "lstm" => Variant::Lstm,
                    "cnn" => Variant::Cnn,
                    other => bail!("model.variant must be bilstm|lstm|cnn, got `{other}`"),
                }
            }
            "model.max_functions" => self.max_functions = num(key, value)?,
            "model.hidden" => self.hidden = num(key, value)?,
            "model.seed" => self.model_seed = num(key, value)?,
            "train.learning_rate" => self.train.learning_rate = num(key, value)?,
            "train.epochs" => self.train.epochs = num(key, value)?,
            "train.batch_size" => self.train.batch_size = num(key, value)?,
            "train.seed" => self.train.seed = num(key, value)?,
            "train.beta1" => self.train.beta1 = num(key, value)?,
            "train.beta2" => self.train.beta2 = num(key, value)?,
            "train.epsilon" => self.train.epsilon = num(key, value)?,
            "train.prob_clip" => self.train.prob_clip = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "fetch.endpoint" => self.fetch_endpoint = Some(value.to_string()),
            "fetch.timeout_secs" => self.fetch_timeout_secs = num(key, value)?,
            "fetch.json_path" => self.fetch_json_path = Some(value.to_string()),
            other => bail!("unknown configuration key `{other}`"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            bail!("dim must be at least 2");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            bail!("threshold must lie strictly between 0 and 1");
        }
        if self.encoder == EncoderKind::File && self.encoder_file.is_none() {
            bail!("encoder=file requires encoder_file=<path>");
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            max_functions: self.max_functions,
            feature_dim: self.dim,
            hidden: self.hidden,
            labels: solintent::corpus::IntentLabel::COUNT,
            variant: self.variant,
        }
    }

    /// Hash of the parameters that shape a stage's output. Cumulative: each
    /// stage includes everything upstream of it.
    pub fn stage_hash(&self, stage: Stage) -> String {
        let mut lines = String::new();
        let mut push = |k: &str, v: String| {
            let _ = writeln!(lines, "{k}={v}");
        };

        push("extract.include_special", self.include_special_units.to_string());
        if stage == Stage::Extract {
            return fnv1a64_hex(lines.as_bytes());
        }

        push(
            "encoder",
            match self.encoder {
                EncoderKind::Hash => "hash".to_string(),
                EncoderKind::File => "file".to_string(),
            },
        );
        // The encoder file participates by content so stale imports are
        // caught even when the path is unchanged.
        let file_digest = match (&self.encoder, &self.encoder_file) {
            (EncoderKind::File, Some(path)) => std::fs::read(path)
                .map(|bytes| format!("{:016x}", fnv1a64(&bytes)))
                .unwrap_or_else(|_| "unreadable".to_string()),
            _ => "-".to_string(),
        };
        push("encoder_file_digest", file_digest);
        push("dim", self.dim.to_string());
        push("encoder_seed", self.encoder_seed.to_string());
        if stage == Stage::Embed {
            return fnv1a64_hex(lines.as_bytes());
        }

        push("kmeans.k_init", self.kmeans.k_init.to_string());
        push("kmeans.max_rounds", self.kmeans.max_rounds.to_string());
        push("kmeans.tolerance", format!("{:e}", self.kmeans.tolerance));
        push("kmeans.seed", self.kmeans.seed.to_string());
        if stage == Stage::TrainHighlight {
            return fnv1a64_hex(lines.as_bytes());
        }

        push("highlight.lambda", format!("{:e}", self.highlight.lambda));
        push("highlight.mu", format!("{:e}", self.highlight.mu));
        if stage == Stage::Highlight {
            return fnv1a64_hex(lines.as_bytes());
        }

        push("model.variant", self.variant.to_string());
        push("model.max_functions", self.max_functions.to_string());
        push("model.hidden", self.hidden.to_string());
        push("model.seed", self.model_seed.to_string());
        push("train.learning_rate", format!("{:e}", self.train.learning_rate));
        push("train.epochs", self.train.epochs.to_string());
        push("train.batch_size", self.train.batch_size.to_string());
        push("train.seed", self.train.seed.to_string());
        push("train.beta1", format!("{:e}", self.train.beta1));
        push("train.beta2", format!("{:e}", self.train.beta2));
        push("train.epsilon", format!("{:e}", self.train.epsilon));
        push("train.prob_clip", format!("{:e}", self.train.prob_clip));
        if stage == Stage::Train {
            return fnv1a64_hex(lines.as_bytes());
        }

        push("threshold", format!("{:e}", self.threshold));
        fnv1a64_hex(lines.as_bytes())
    }
}

/// Trailing `#` comments are allowed after a value when preceded by
/// whitespace.
fn strip_inline_comment(value: &str) -> &str {
    let mut prev_ws = true;
    for (i, c) in value.char_indices() {
        if c == '#' && prev_ws {
            return &value[..i];
        }
        prev_ws = c.is_whitespace();
    }
    value
}

/// Compare a recorded artifact hash against the hash the current
/// configuration would produce for that stage.
pub fn verify_hash(
    artifact: &Path,
    recorded: &str,
    expected: &str,
    allow_mismatch: bool,
) -> Result<()> {
    if recorded == expected {
        return Ok(());
    }
    if allow_mismatch {
        eprintln!(
            "note: {} was produced under a different configuration (recorded {recorded}, current {expected})",
            artifact.display()
        );
        return Ok(());
    }
    bail!(
        "{}: config hash mismatch (recorded {recorded}, current {expected}); \
         re-run the producing stage or pass --allow-config-mismatch",
        artifact.display()
    )
}
