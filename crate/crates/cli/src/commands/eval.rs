//! `eval`: score a checkpoint on a dataset file and emit the metric CSV.

use std::path::Path;

use anyhow::{Context, Result};
use pruneood_core::graph::io::read_dataset;
use pruneood_core::trainer::{evaluate, Checkpoint};

use crate::config::RunConfig;

pub fn run(cfg: &RunConfig, checkpoint: &Path, dataset: &Path, out: &Path) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let graphs = read_dataset(dataset)
        .with_context(|| format!("reading dataset {}", dataset.display()))?;
    let report = evaluate(&ckpt, &graphs, &cfg.metric_options())?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(out, report.to_csv())?;
    println!("{}", report.summary_line());
    println!("wrote {}", out.display());
    Ok(())
}
