use anyhow::{Context, Result};
use solintent::artifact::{write_jsonl, ArtifactHeader};
use solintent::corpus::load_dataset;
use solintent::extract::{
    dedupe_functions, extract_functions_with, normalize_source, ExtractOptions,
};

use crate::config::{PipelineConfig, Stage};
use crate::records::{SnippetRecord, SNIPPETS_KIND};

use super::{ensure_parent, require_input};

pub fn run(cfg: &PipelineConfig) -> Result<()> {
    require_input(&cfg.dataset, "fetch (or provide a dataset)")?;
    let contracts = load_dataset(&cfg.dataset)?;
    let options = ExtractOptions {
        include_special_units: cfg.include_special_units,
    };

    let mut records = Vec::new();
    let mut contract_count = 0usize;
    for contract in &contracts {
        let normalized = normalize_source(&contract.source)
            .with_context(|| format!("normalizing {}", contract.address))?
            .with_provenance(&contract.address);
        let functions = extract_functions_with(&normalized, &options)
            .with_context(|| format!("extracting {}", contract.address))?;
        contract_count += 1;
        for f in dedupe_functions(functions) {
            records.push(SnippetRecord {
                address: contract.address.clone(),
                owner: f.owner,
                name: f.name,
                kind: f.kind,
                text: f.text,
            });
        }
    }

    ensure_parent(&cfg.snippets)?;
    let header = ArtifactHeader::new(SNIPPETS_KIND, cfg.stage_hash(Stage::Extract));
    write_jsonl(&cfg.snippets, &header, &records)?;
    crate::out::line(format!(
        "extract: {} functions from {} contracts -> {}",
        records.len(),
        contract_count,
        cfg.snippets.display()
    ));
    Ok(())
}
