//! `gen-data`: generate the three dataset splits plus a statistics sidecar.

use std::path::Path;

use anyhow::{Context, Result};
use pruneood_core::graph::io::write_dataset;
use pruneood_core::synth::{generate, split_stats, SPLIT_NAMES};

use crate::commands::write_run_metadata;
use crate::config::RunConfig;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<()> {
    write_run_metadata(out, cfg)?;
    let shift = cfg.shift_config();
    let bundle = generate(&shift).context("generating dataset")?;

    let mut stats = serde_json::Map::new();
    for (name, split) in SPLIT_NAMES.iter().zip(bundle.splits()) {
        let path = out.join(format!("{name}.jsonl"));
        write_dataset(&path, split)
            .with_context(|| format!("writing {}", path.display()))?;
        stats.insert(
            (*name).to_string(),
            serde_json::to_value(split_stats(split))?,
        );
        println!("wrote {} ({} graphs)", path.display(), split.len());
    }
    let sidecar = out.join("stats.json");
    std::fs::write(&sidecar, serde_json::to_string_pretty(&stats)?)?;
    println!("wrote {}", sidecar.display());
    Ok(())
}
