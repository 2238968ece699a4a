//! `report`: aggregate training-log CSVs from one or more run directories
//! into a summary table and trajectory plots.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::svg;

struct RunSummary {
    name: String,
    label: String,
    seed: String,
    epochs: usize,
    best_epoch: usize,
    best_val: f64,
    final_train_loss: f64,
    gc_prob: Vec<(f64, f64)>,
    gc_rank: Vec<(f64, f64)>,
}

fn read_label_seed(dir: &Path) -> (String, String) {
    let mut label = String::from("unknown");
    let mut seed = String::from("?");
    if let Ok(text) = std::fs::read_to_string(dir.join("resolved_config.txt")) {
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                match k.trim() {
                    "label" => label = v.trim().to_string(),
                    "seed" => seed = v.trim().to_string(),
                    _ => {}
                }
            }
        }
    }
    (label, seed)
}

fn read_run(dir: &Path) -> Result<RunSummary> {
    let log_path = dir.join("trainlog.csv");
    let text = std::fs::read_to_string(&log_path)
        .with_context(|| format!("reading {}", log_path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with("epoch,") {
        bail!("{} does not look like a training log", log_path.display());
    }
    let mut epochs = 0;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut final_loss = f64::NAN;
    let mut gc_prob = Vec::new();
    let mut gc_rank = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 7 {
            continue;
        }
        let epoch: usize = cols[0].parse()?;
        let loss: f64 = cols[1].parse()?;
        let val: f64 = cols[4].parse()?;
        epochs += 1;
        final_loss = loss;
        if val > best.1 {
            best = (epoch, val);
        }
        if let Ok(p) = cols[5].parse::<f64>() {
            gc_prob.push((epoch as f64, p));
        }
        if let Ok(r) = cols[6].parse::<f64>() {
            gc_rank.push((epoch as f64, r));
        }
    }
    let (label, seed) = read_label_seed(dir);
    Ok(RunSummary {
        name: dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string()),
        label,
        seed,
        epochs,
        best_epoch: best.0,
        best_val: best.1,
        final_train_loss: final_loss,
        gc_prob,
        gc_rank,
    })
}

pub fn run(run_dirs: &[PathBuf], out_dir: &Path, no_plot: bool) -> Result<()> {
    if run_dirs.is_empty() {
        bail!("no run directories given");
    }
    let runs: Vec<RunSummary> = run_dirs.iter().map(|d| read_run(d)).collect::<Result<_>>()?;

    std::fs::create_dir_all(out_dir)?;
    let mut csv =
        String::from("run,label,seed,epochs,best_epoch,best_val_metric,final_train_loss\n");
    for r in &runs {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.name, r.label, r.seed, r.epochs, r.best_epoch, r.best_val, r.final_train_loss
        ));
    }
    let csv_path = out_dir.join("summary.csv");
    std::fs::write(&csv_path, csv)?;
    println!("wrote {}", csv_path.display());

    if !no_plot {
        let prob_series: Vec<(String, Vec<(f64, f64)>)> = runs
            .iter()
            .filter(|r| !r.gc_prob.is_empty())
            .map(|r| (format!("{} prob", r.name), r.gc_prob.clone()))
            .collect();
        let rank_series: Vec<(String, Vec<(f64, f64)>)> = runs
            .iter()
            .filter(|r| !r.gc_rank.is_empty())
            .map(|r| (format!("{} rank", r.name), r.gc_rank.clone()))
            .collect();
        if !prob_series.is_empty() {
            let chart = svg::polylines("Mean invariant-edge probability per epoch", &prob_series);
            std::fs::write(out_dir.join("gc_prob.svg"), chart)?;
            println!("wrote {}", out_dir.join("gc_prob.svg").display());
        }
        if !rank_series.is_empty() {
            let chart = svg::polylines("Mean invariant-edge rank per epoch", &rank_series);
            std::fs::write(out_dir.join("gc_rank.svg"), chart)?;
            println!("wrote {}", out_dir.join("gc_rank.svg").display());
        }
    }
    Ok(())
}
