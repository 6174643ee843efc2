//! Shared scaffolding for CLI tests: an isolated workspace directory, the
//! fixture dataset, and a desk-scale pipeline configuration.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_solintent")
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub struct Workspace {
    pub dir: PathBuf,
}

impl Workspace {
    pub fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "solintent-cli-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Workspace { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Build `contracts.jsonl` from the fixture corpus and its manifest.
    pub fn write_fixture_dataset(&self) -> PathBuf {
        let manifest_raw =
            std::fs::read_to_string(fixtures_dir().join("manifest.json")).unwrap();
        let manifest: Vec<serde_json::Value> = serde_json::from_str(&manifest_raw).unwrap();
        let mut lines = String::new();
        for entry in &manifest {
            let file = entry["file"].as_str().unwrap();
            let source = std::fs::read_to_string(fixtures_dir().join(file)).unwrap();
            let record = serde_json::json!({
                "address": entry["address"],
                "source": source,
                "labels": entry["labels"],
            });
            lines.push_str(&record.to_string());
            lines.push('\n');
        }
        let path = self.path("contracts.jsonl");
        std::fs::write(&path, lines).unwrap();
        path
    }

    /// Desk-scale configuration: small dims and epochs, and a lambda suited
    /// to hash-encoder geometry so the scaling branch actually fires.
    pub fn write_config(&self) -> PathBuf {
        let config = "\
dataset = contracts.jsonl
snippets = out/snippets.jsonl
embeddings = out/embeddings.jsonl
highlighted = out/highlighted.jsonl
kmeans_model = out/kmeans.json
weights = out/weights.json
detections = out/detections.json
metrics = out/metrics.json
train_log = out/train_log.csv
report = out/report.html
dim = 64
encoder_seed = 7
kmeans.k_init = 6
kmeans.seed = 3
highlight.lambda = 0.3
highlight.mu = 2
model.variant = bilstm
model.max_functions = 32
model.hidden = 16
model.seed = 11
train.learning_rate = 0.01
train.epochs = 80
train.batch_size = 8
train.seed = 42
threshold = 0.5
";
        let path = self.path("pipeline.conf");
        std::fs::write(&path, config).unwrap();
        path
    }

    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(bin())
            .current_dir(&self.dir)
            .args(args)
            .output()
            .expect("binary runs")
    }

    pub fn run_ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "command {:?} failed\nstdout: {}\nstderr: {}",
            args,
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

#[allow(dead_code)] // not every test target uses every helper
pub fn exit_code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}
