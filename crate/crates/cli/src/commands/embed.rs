use anyhow::{Context, Result};
use solintent::artifact::{read_jsonl, write_jsonl, ArtifactHeader};
use solintent::embed::{Encoder, FileEncoder, HashEncoder};
use solintent::hash::snippet_key;

use crate::config::{verify_hash, EncoderKind, PipelineConfig, Stage};
use crate::records::{EmbeddingRecord, SnippetRecord, EMBEDDINGS_KIND, SNIPPETS_KIND};

use super::{ensure_parent, require_input};

/// Build the configured encoder.
pub fn make_encoder(cfg: &PipelineConfig) -> Result<Box<dyn Encoder>> {
    Ok(match cfg.encoder {
        EncoderKind::Hash => Box::new(HashEncoder::new(cfg.dim, cfg.encoder_seed)?),
        EncoderKind::File => {
            let path = cfg
                .encoder_file
                .as_ref()
                .expect("validated with the config");
            Box::new(
                FileEncoder::from_path(path, cfg.dim)
                    .with_context(|| format!("loading encoder file {}", path.display()))?,
            )
        }
    })
}

pub fn run(cfg: &PipelineConfig, allow_mismatch: bool) -> Result<()> {
    require_input(&cfg.snippets, "extract")?;
    let (header, snippets): (_, Vec<SnippetRecord>) = read_jsonl(&cfg.snippets, SNIPPETS_KIND)?;
    verify_hash(
        &cfg.snippets,
        &header.config_hash,
        &cfg.stage_hash(Stage::Extract),
        allow_mismatch,
    )?;

    let encoder = make_encoder(cfg)?;
    let mut records = Vec::with_capacity(snippets.len());
    for s in snippets {
        let embedding = encoder
            .encode(&s.text)
            .with_context(|| format!("{}: function `{}`", s.address, s.name))?;
        records.push(EmbeddingRecord {
            address: s.address,
            key: snippet_key(&s.text),
            owner: s.owner,
            name: s.name,
            vector: embedding.into_values(),
        });
    }

    ensure_parent(&cfg.embeddings)?;
    let out_header = ArtifactHeader::new(EMBEDDINGS_KIND, cfg.stage_hash(Stage::Embed));
    write_jsonl(&cfg.embeddings, &out_header, &records)?;
    crate::out::line(format!(
        "embed: {} vectors (dim {}) -> {}",
        records.len(),
        cfg.dim,
        cfg.embeddings.display()
    ));
    Ok(())
}
