pub mod case_study;
pub mod eval;
pub mod gen_data;
pub mod grad_check;
pub mod report;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};

use crate::config::RunConfig;

/// Write the resolved configuration and a timestamp sidecar into a run
/// directory. Timestamps live only in `meta.txt` so every other output is
/// reproducible byte for byte.
pub fn write_run_metadata(dir: &Path, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    std::fs::write(dir.join("resolved_config.txt"), cfg.to_kv_string())?;
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    std::fs::write(
        dir.join("meta.txt"),
        format!("label = {}\nunix_time = {now}\n", cfg.effective_label()),
    )?;
    Ok(())
}
