//! `train`: single runs and hyperparameter grids.
//!
//! Each run directory receives the resolved config, `trainlog.csv`,
//! `best.ckpt` and `last.ckpt`. Checkpoints are written after every epoch
//! with write-then-rename, so an interrupted run leaves valid files.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pruneood_core::graph::io::read_dataset;
use pruneood_core::synth::DatasetBundle;
use pruneood_core::trainer::{train_with_callback, TrainLog, TRAINLOG_HEADER};

use crate::commands::write_run_metadata;
use crate::config::RunConfig;

pub fn load_bundle(data_dir: &Path) -> Result<DatasetBundle> {
    let read = |name: &str| {
        let path = data_dir.join(format!("{name}.jsonl"));
        read_dataset(&path).with_context(|| format!("reading {}", path.display()))
    };
    Ok(DatasetBundle {
        train: read("train")?,
        val: read("val")?,
        test: read("test")?,
    })
}

pub fn run_single(cfg: &RunConfig, bundle: &DatasetBundle, out: &Path) -> Result<()> {
    write_run_metadata(out, cfg)?;
    let tc = cfg.train_config();

    let log_path = out.join("trainlog.csv");
    let mut log_file = File::create(&log_path)?;
    writeln!(log_file, "{TRAINLOG_HEADER}")?;

    let (best, _log) = train_with_callback(bundle, &tc, |ev| {
        log_file
            .write_all(TrainLog::row_csv(ev.row).as_bytes())
            .map_err(pruneood_core::Error::Io)?;
        log_file.flush().map_err(pruneood_core::Error::Io)?;
        ev.checkpoint.save(out.join("last.ckpt"))?;
        if ev.is_best {
            ev.checkpoint.save(out.join("best.ckpt"))?;
        }
        println!(
            "epoch {:>3}  loss {:>8.4}  val {:>7.4}{}",
            ev.row.epoch,
            ev.row.train_loss,
            ev.row.val_metric,
            if ev.is_best { "  *" } else { "" }
        );
        Ok(())
    })?;

    best.save(out.join("best.ckpt"))?;
    println!(
        "done: best epoch {} with validation {:.4}; outputs in {}",
        best.epoch,
        best.val_metric,
        out.display()
    );
    Ok(())
}

/// Enumerate the configured hyperparameter grid, one run directory per
/// combination.
pub fn run_grid(cfg: &RunConfig, bundle: &DatasetBundle, out: &Path) -> Result<()> {
    let mut combos: Vec<RunConfig> = Vec::new();
    for &eta in &cfg.grid_eta {
        for &l1 in &cfg.grid_lambda1 {
            for &l2 in &cfg.grid_lambda2 {
                for &k in &cfg.grid_k_percent {
                    let mut c = cfg.clone();
                    c.eta = eta;
                    c.lambda1 = l1;
                    c.lambda2 = l2;
                    c.k_percent = k;
                    combos.push(c);
                }
            }
        }
    }
    println!("grid: {} combinations", combos.len());
    let dirs: Vec<PathBuf> = combos
        .iter()
        .map(|c| {
            out.join(format!(
                "{}_eta{}_l1_{}_l2_{}_k{}",
                c.effective_label(),
                c.eta,
                c.lambda1,
                c.lambda2,
                c.k_percent
            ))
        })
        .collect();

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        combos
            .par_iter()
            .zip(dirs.par_iter())
            .try_for_each(|(c, dir)| run_single(c, bundle, dir))?;
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (c, dir) in combos.iter().zip(&dirs) {
            run_single(c, bundle, dir)?;
        }
    }
    Ok(())
}
