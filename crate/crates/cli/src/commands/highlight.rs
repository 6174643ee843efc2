use anyhow::Result;
use solintent::artifact::{read_jsonl, write_jsonl, ArtifactHeader};
use solintent::embed::{Embedding, EmbeddingMatrix};
use solintent::highlight::highlight;

use crate::config::{verify_hash, PipelineConfig, Stage};
use crate::records::{
    group_by_address, EmbeddingRecord, HighlightedRecord, EMBEDDINGS_KIND, HIGHLIGHTED_KIND,
};

use super::{ensure_parent, require_input};

pub fn run(cfg: &PipelineConfig, allow_mismatch: bool) -> Result<()> {
    require_input(&cfg.embeddings, "embed")?;
    let (eh, embeddings): (_, Vec<EmbeddingRecord>) =
        read_jsonl(&cfg.embeddings, EMBEDDINGS_KIND)?;
    verify_hash(
        &cfg.embeddings,
        &eh.config_hash,
        &cfg.stage_hash(Stage::Embed),
        allow_mismatch,
    )?;
    let model = super::train_highlight::load_kmeans(cfg, allow_mismatch)?;

    let mut records = Vec::with_capacity(embeddings.len());
    let mut scaled_count = 0usize;
    for (_, rows) in group_by_address(embeddings, |r| &r.address) {
        let matrix = EmbeddingMatrix::new(
            rows.iter()
                .map(|r| Embedding::new(r.vector.clone()))
                .collect::<Result<_, _>>()?,
            cfg.dim,
        )?;
        let out = highlight(&model, &matrix, &cfg.highlight)?;
        for (rec, strength) in rows.into_iter().zip(out.strengths) {
            let row = out.matrix.row(strength.index).as_slice().to_vec();
            scaled_count += usize::from(strength.scaled);
            records.push(HighlightedRecord {
                address: rec.address,
                key: rec.key,
                owner: rec.owner,
                name: rec.name,
                cluster: strength.cluster,
                distance: strength.distance,
                scaled: strength.scaled,
                vector: row,
            });
        }
    }

    ensure_parent(&cfg.highlighted)?;
    let header = ArtifactHeader::new(HIGHLIGHTED_KIND, cfg.stage_hash(Stage::Highlight));
    write_jsonl(&cfg.highlighted, &header, &records)?;
    crate::out::line(format!(
        "highlight: {} of {} rows scaled by {} -> {}",
        scaled_count,
        records.len(),
        cfg.highlight.mu,
        cfg.highlighted.display()
    ));
    Ok(())
}
