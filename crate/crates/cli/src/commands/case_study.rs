//! `case-study`: composition of the top-K predicted edges as K shrinks.
//!
//! For each multiplier K the mean number of invariant and spurious edges
//! among the top `K * |G_c|` scored edges is tabulated per graph and
//! averaged. `--oracle` substitutes ground-truth scores as a reference
//! baseline.

use std::path::Path;

use anyhow::{bail, Context, Result};
use pruneood_core::graph::io::read_dataset;
use pruneood_core::metrics::topk_edge_counts;
use pruneood_core::trainer::{selector_scores, Checkpoint};

use crate::config::RunConfig;
use crate::svg;

pub fn run(
    cfg: &RunConfig,
    checkpoint: &Path,
    dataset: &Path,
    out_dir: &Path,
    oracle: bool,
    no_plot: bool,
) -> Result<()> {
    let graphs = read_dataset(dataset)
        .with_context(|| format!("reading dataset {}", dataset.display()))?;
    if graphs.iter().any(|g| g.edge_truth.is_none()) {
        bail!("case study needs ground-truth edge annotations in the dataset");
    }

    let (scores, truth, ranges) = if oracle {
        let truth: Vec<bool> = graphs
            .iter()
            .flat_map(|g| g.edge_truth.as_ref().unwrap().iter().copied())
            .collect();
        let scores: Vec<f64> = truth.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
        let mut ranges = Vec::with_capacity(graphs.len());
        let mut off = 0;
        for g in &graphs {
            ranges.push((off, off + g.num_edges()));
            off += g.num_edges();
        }
        (scores, truth, ranges)
    } else {
        let ckpt = Checkpoint::load(checkpoint)
            .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
        let s = selector_scores(&ckpt, &graphs, cfg.batch_size)?;
        let truth = s.truth.expect("edge truth checked above");
        (s.scores, truth, s.edge_ranges)
    };

    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("k_multiplier,mean_invariant_edges,mean_spurious_edges\n");
    let mut groups = Vec::new();
    for &k in &cfg.k_multipliers {
        let (inv, spu) = topk_edge_counts(&scores, &truth, &ranges, k)?;
        csv.push_str(&format!("{k},{inv},{spu}\n"));
        groups.push((format!("K={k}|Gc|"), inv, spu));
        println!("K = {k} |Gc|: invariant {inv:.2}, spurious {spu:.2}");
    }
    let csv_path = out_dir.join("case_study.csv");
    std::fs::write(&csv_path, csv)?;
    println!("wrote {}", csv_path.display());

    if !no_plot {
        let chart = svg::grouped_bars(
            "Top-K predicted edge composition",
            &groups,
            "invariant",
            "spurious",
        );
        let svg_path = out_dir.join("case_study.svg");
        std::fs::write(&svg_path, chart)?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}
