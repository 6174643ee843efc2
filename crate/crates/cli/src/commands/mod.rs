pub mod detect;
pub mod embed;
pub mod evaluate;
pub mod extract;
pub mod fetch;
pub mod highlight;
pub mod report;
pub mod train;
pub mod train_highlight;

use std::path::Path;

use anyhow::{Context, Result};

/// Create the parent directory of an output path if needed.
pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create directory {}", parent.display()))?;
        }
    }
    Ok(())
}

/// Fail with a message naming the missing input artifact.
pub fn require_input(path: &Path, produced_by: &str) -> Result<()> {
    if !path.exists() {
        anyhow::bail!(
            "missing input artifact {}; run `solintent {produced_by}` first",
            path.display()
        );
    }
    Ok(())
}
