//! Label metrics and selector-quality diagnostics.
//!
//! Beyond accuracy and ROC-AUC, the module scores how well per-edge
//! probabilities separate invariant from spurious edges: pooled edge
//! ROC-AUC, top-K edge composition, recall/precision of the lowest-K%
//! edges treated as predicted-spurious, and probability/rank statistics of
//! the invariant edges. Every ranking breaks ties toward the smaller edge
//! index, so results are reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of argmax matches; argmax ties resolve to the lowest class.
pub fn accuracy(logits: &[f64], num_classes: usize, labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::contract("accuracy of an empty set"));
    }
    if logits.len() != labels.len() * num_classes {
        return Err(Error::contract(format!(
            "{} logits for {} rows of {} classes",
            logits.len(),
            labels.len(),
            num_classes
        )));
    }
    let hits = labels
        .iter()
        .enumerate()
        .filter(|&(i, &y)| argmax(&logits[i * num_classes..(i + 1) * num_classes]) == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mann-Whitney ROC-AUC with average ranks for ties.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::contract("score/label length mismatch"));
    }
    let n_pos = labels.iter().filter(|&&b| b).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "roc_auc requires both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // 1-based average ranks over tied groups
    let mut rank_pos_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_pos_sum += avg_rank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_pos_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Pooled edge ROC-AUC over all graphs, and restricted to graphs whose
/// label prediction was correct. Either value is `None` when its pool does
/// not contain both edge classes.
pub fn edge_auc(
    scores: &[f64],
    truth: &[bool],
    edge_ranges: &[(usize, usize)],
    correct: &[bool],
) -> Result<(Option<f64>, Option<f64>)> {
    if scores.len() != truth.len() {
        return Err(Error::contract("edge score/truth length mismatch"));
    }
    if edge_ranges.len() != correct.len() {
        return Err(Error::contract("edge ranges do not match correctness flags"));
    }
    let all = roc_auc(scores, truth).ok();
    let mut sel_scores = Vec::new();
    let mut sel_truth = Vec::new();
    for (g, &(s, e)) in edge_ranges.iter().enumerate() {
        if correct[g] {
            sel_scores.extend_from_slice(&scores[s..e]);
            sel_truth.extend_from_slice(&truth[s..e]);
        }
    }
    let correct_only = if sel_scores.is_empty() {
        None
    } else {
        roc_auc(&sel_scores, &sel_truth).ok()
    };
    Ok((all, correct_only))
}

/// Sort edge indices of one graph by descending score, ties toward the
/// smaller index.
fn ranked_desc(scores: &[f64], start: usize, end: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (start..end).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Mean counts of invariant and spurious edges among each graph's top
/// `ceil(k_multiplier * |G_c|)` edges by score.
pub fn topk_edge_counts(
    scores: &[f64],
    truth: &[bool],
    edge_ranges: &[(usize, usize)],
    k_multiplier: f64,
) -> Result<(f64, f64)> {
    if k_multiplier <= 0.0 {
        return Err(Error::contract(format!(
            "k_multiplier must be positive, got {k_multiplier}"
        )));
    }
    let mut inv_sum = 0.0;
    let mut spu_sum = 0.0;
    let mut graphs = 0usize;
    for &(s, e) in edge_ranges {
        let gc = truth[s..e].iter().filter(|&&b| b).count();
        if gc == 0 {
            continue;
        }
        let k = ((k_multiplier * gc as f64).ceil() as usize).min(e - s);
        let ranked = ranked_desc(scores, s, e);
        let inv = ranked[..k].iter().filter(|&&i| truth[i]).count();
        inv_sum += inv as f64;
        spu_sum += (k - inv) as f64;
        graphs += 1;
    }
    if graphs == 0 {
        return Err(Error::UndefinedMetric(
            "top-K counts need at least one graph with invariant edges".into(),
        ));
    }
    Ok((inv_sum / graphs as f64, spu_sum / graphs as f64))
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct RecallPrecision {
    pub recall: f64,
    pub precision: f64,
    /// Graphs with no spurious edges at all, scored as recall 1 by
    /// convention.
    pub vacuous_graphs: usize,
}

/// Treat each graph's lowest-`k_percent` edges by score as
/// predicted-spurious and compare against the ground truth, averaging over
/// graphs.
pub fn recall_precision_at_k(
    scores: &[f64],
    truth: &[bool],
    edge_ranges: &[(usize, usize)],
    k_percent: f64,
) -> Result<RecallPrecision> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::contract(format!(
            "k_percent must lie in (0, 100], got {k_percent}"
        )));
    }
    let mut recall_sum = 0.0;
    let mut precision_sum = 0.0;
    let mut vacuous = 0usize;
    for &(s, e) in edge_ranges {
        let m = e - s;
        let count = ((k_percent / 100.0 * m as f64).ceil() as usize).min(m);
        let mut idx: Vec<usize> = (s..e).collect();
        idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let predicted = &idx[..count];
        let hit = predicted.iter().filter(|&&i| !truth[i]).count();
        let total_spurious = truth[s..e].iter().filter(|&&b| !b).count();
        if total_spurious == 0 {
            vacuous += 1;
            recall_sum += 1.0;
        } else {
            recall_sum += hit as f64 / total_spurious as f64;
        }
        precision_sum += hit as f64 / count as f64;
    }
    if edge_ranges.is_empty() {
        return Err(Error::contract("recall/precision of an empty set"));
    }
    let n = edge_ranges.len() as f64;
    Ok(RecallPrecision {
        recall: recall_sum / n,
        precision: precision_sum / n,
        vacuous_graphs: vacuous,
    })
}

/// Mean score of invariant edges and their mean normalized rank
/// (0 = highest-ranked, ranks divided by `m - 1`), averaged over graphs
/// that contain invariant edges.
pub fn gc_rank_stats(
    scores: &[f64],
    truth: &[bool],
    edge_ranges: &[(usize, usize)],
) -> Result<(f64, f64)> {
    let mut prob_sum = 0.0;
    let mut rank_sum = 0.0;
    let mut graphs = 0usize;
    for &(s, e) in edge_ranges {
        let m = e - s;
        let gc = truth[s..e].iter().filter(|&&b| b).count();
        if gc == 0 {
            continue;
        }
        let ranked = ranked_desc(scores, s, e);
        let mut p = 0.0;
        let mut r = 0.0;
        for (rank, &i) in ranked.iter().enumerate() {
            if truth[i] {
                p += scores[i];
                r += if m > 1 { rank as f64 / (m - 1) as f64 } else { 0.0 };
            }
        }
        prob_sum += p / gc as f64;
        rank_sum += r / gc as f64;
        graphs += 1;
    }
    if graphs == 0 {
        return Err(Error::UndefinedMetric(
            "rank stats need at least one graph with invariant edges".into(),
        ));
    }
    Ok((prob_sum / graphs as f64, rank_sum / graphs as f64))
}

/// Everything `evaluate` reports for one dataset split.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    /// Present for binary tasks only.
    pub roc_auc: Option<f64>,
    pub edge_auc_all: Option<f64>,
    /// Restricted to correctly predicted graphs.
    pub edge_auc_correct: Option<f64>,
    /// `(k_multiplier, mean invariant count, mean spurious count)`.
    pub topk_counts: Vec<(f64, f64, f64)>,
    /// `(k_percent, recall)`.
    pub recall_at_k: Vec<(f64, f64)>,
    /// `(k_percent, precision)`.
    pub precision_at_k: Vec<(f64, f64)>,
    pub mean_gc_prob: Option<f64>,
    pub mean_gc_rank: Option<f64>,
    pub vacuous_recall_graphs: usize,
}

impl MetricReport {
    /// Long-format CSV with the exact header `metric,key,value`. Rows for
    /// undefined metrics are omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,key,value\n");
        let mut push = |metric: &str, key: String, value: f64| {
            out.push_str(&format!("{metric},{key},{value}\n"));
        };
        push("accuracy", String::new(), self.accuracy);
        if let Some(v) = self.roc_auc {
            push("roc_auc", String::new(), v);
        }
        if let Some(v) = self.edge_auc_all {
            push("edge_auc_all", String::new(), v);
        }
        if let Some(v) = self.edge_auc_correct {
            push("edge_auc_correct", String::new(), v);
        }
        for &(k, inv, spu) in &self.topk_counts {
            push("topk_invariant", format!("{k}"), inv);
            push("topk_spurious", format!("{k}"), spu);
        }
        for &(k, v) in &self.recall_at_k {
            push("recall_at_k", format!("{k}"), v);
        }
        for &(k, v) in &self.precision_at_k {
            push("precision_at_k", format!("{k}"), v);
        }
        if let Some(v) = self.mean_gc_prob {
            push("mean_gc_prob", String::new(), v);
        }
        if let Some(v) = self.mean_gc_rank {
            push("mean_gc_rank", String::new(), v);
        }
        push(
            "vacuous_recall_graphs",
            String::new(),
            self.vacuous_recall_graphs as f64,
        );
        out
    }

    /// One-line summary for terminal output.
    pub fn summary_line(&self) -> String {
        let mut s = format!("accuracy={:.4}", self.accuracy);
        if let Some(v) = self.roc_auc {
            s.push_str(&format!(" roc_auc={v:.4}"));
        }
        if let Some(v) = self.edge_auc_correct {
            s.push_str(&format!(" edge_auc={v:.4}"));
        }
        if let Some(v) = self.mean_gc_prob {
            s.push_str(&format!(" gc_prob={v:.4}"));
        }
        if let Some(v) = self.mean_gc_rank {
            s.push_str(&format!(" gc_rank={v:.4}"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Brute-force pairwise AUC: wins plus half ties over all pos/neg pairs.
    pub(crate) fn auc_brute_force(scores: &[f64], labels: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            if !li {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn accuracy_basics() {
        let logits = vec![1.0, 0.0, 0.0, 1.0];
        assert_eq!(accuracy(&logits, 2, &[0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&logits, 2, &[1, 0]).unwrap(), 0.0);
        let l4 = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        assert_eq!(accuracy(&l4, 2, &[0, 0, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[], 2, &[]).is_err());
        // argmax tie resolves to the lowest class index
        assert_eq!(accuracy(&[0.5, 0.5], 2, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn roc_auc_hand_case() {
        let auc = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn roc_auc_extremes() {
        let perfect = roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(perfect, 1.0);
        let ties = roc_auc(&[0.5; 6], &[true, false, true, false, true, false]).unwrap();
        assert_eq!(ties, 0.5);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn roc_auc_matches_brute_force_with_ties() {
        let mut rng = crate::rng::stream_rng(41, "metrics", &[]);
        for round in 0..100 {
            let n = rng.gen_range(2..=200);
            // coarse grid so ties happen often
            let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..8) as f64) / 8.0).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            labels[0] = true;
            if n > 1 {
                labels[1] = false;
            }
            let fast = roc_auc(&scores, &labels).unwrap();
            let brute = auc_brute_force(&scores, &labels);
            assert!((fast - brute).abs() < 1e-12, "round {round}: {fast} vs {brute}");
        }
    }

    #[test]
    fn edge_auc_oracle_and_null() {
        // oracle: invariant edges scored high
        let truth = vec![true, true, false, false, false, false];
        let scores: Vec<f64> = truth.iter().map(|&t| if t { 10.0 } else { -10.0 }).collect();
        let (all, correct) = edge_auc(&scores, &truth, &[(0, 6)], &[true]).unwrap();
        assert_eq!(all.unwrap(), 1.0);
        assert_eq!(correct.unwrap(), 1.0);

        // random scores hover near 1/2 on a large pool
        let mut rng = crate::rng::stream_rng(42, "metrics", &[]);
        let n = 10_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let truth: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let (all, _) = edge_auc(&scores, &truth, &[(0, n)], &[true]).unwrap();
        assert!((all.unwrap() - 0.5).abs() < 0.04);
    }

    #[test]
    fn edge_auc_six_edge_case_matches_pairwise() {
        let scores = [0.9, 0.2, 0.6, 0.6, 0.3, 0.1];
        let truth = [true, false, true, false, false, false];
        let (all, _) = edge_auc(&scores, &truth, &[(0, 6)], &[true]).unwrap();
        assert!((all.unwrap() - auc_brute_force(&scores, &truth)).abs() < 1e-12);
    }

    #[test]
    fn edge_auc_correct_only_filters_graphs() {
        // second graph mislabeled, its inverted scores must not count
        let scores = [0.9, 0.1, 0.1, 0.9];
        let truth = [true, false, true, false];
        let ranges = [(0, 2), (2, 4)];
        let (all, correct) = edge_auc(&scores, &truth, &ranges, &[true, false]).unwrap();
        assert_eq!(correct.unwrap(), 1.0);
        assert!(all.unwrap() < 1.0);
    }

    #[test]
    fn topk_oracle_compositions() {
        // 6 invariant among 12, oracle scores
        let truth: Vec<bool> = (0..12).map(|i| i < 6).collect();
        let scores: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(i, &t)| if t { 5.0 + i as f64 * 0.1 } else { -5.0 - i as f64 * 0.1 })
            .collect();
        let ranges = [(0usize, 12usize)];
        let (inv, spu) = topk_edge_counts(&scores, &truth, &ranges, 1.0).unwrap();
        assert_eq!((inv, spu), (6.0, 0.0));
        // K = 1.5|Gc| forces the extras to be spurious
        let (inv, spu) = topk_edge_counts(&scores, &truth, &ranges, 1.5).unwrap();
        assert_eq!((inv, spu), (6.0, 3.0));
        assert!(topk_edge_counts(&scores, &truth, &ranges, 0.0).is_err());
    }

    #[test]
    fn topk_hand_interleaved_case() {
        // 8 edges, truth at 0,2,4; scores interleave the classes
        let scores = [0.95, 0.90, 0.85, 0.80, 0.40, 0.30, 0.20, 0.10];
        let truth = [true, false, true, false, true, false, false, false];
        // |Gc| = 3, k = 3: ranked top-3 is edges 0,1,2 so 2 invariant, 1 spurious
        let (inv, spu) = topk_edge_counts(&scores, &truth, &[(0, 8)], 1.0).unwrap();
        assert_eq!((inv, spu), (2.0, 1.0));
    }

    #[test]
    fn recall_precision_cases() {
        // oracle: lowest scores all spurious
        let truth = [true, true, false, false, false, false];
        let scores: Vec<f64> = truth
            .iter()
            .enumerate()
            .map(|(i, &t)| if t { 10.0 } else { -10.0 + i as f64 * 0.01 })
            .collect();
        let rp = recall_precision_at_k(&scores, &truth, &[(0, 6)], 30.0).unwrap();
        assert_eq!(rp.precision, 1.0);

        // K = 100 selects everything: recall 1
        let rp = recall_precision_at_k(&scores, &truth, &[(0, 6)], 100.0).unwrap();
        assert_eq!(rp.recall, 1.0);

        // 10 edges, 6 spurious, K=50: one spurious edge escapes with a high
        // score, so the bottom five are all hits and one goes missing
        let truth10 = [
            false, false, false, false, false, false, true, true, true, true,
        ];
        let mut scores10 = vec![0.0; 10];
        for (i, s) in scores10.iter_mut().enumerate() {
            *s = match i {
                0..=4 => 0.1 + i as f64 * 0.01, // five spurious at the bottom
                5 => 0.9,                       // spurious edge that escapes
                _ => 0.8 + i as f64 * 0.01,
            };
        }
        let rp = recall_precision_at_k(&scores10, &truth10, &[(0, 10)], 50.0).unwrap();
        assert!((rp.recall - 5.0 / 6.0).abs() < 1e-12);
        assert!((rp.precision - 5.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn vacuous_recall_flagged() {
        let truth = [true, true, true];
        let scores = [0.5, 0.6, 0.7];
        let rp = recall_precision_at_k(&scores, &truth, &[(0, 3)], 50.0).unwrap();
        assert_eq!(rp.vacuous_graphs, 1);
        assert_eq!(rp.recall, 1.0);
    }

    #[test]
    fn gc_rank_oracle_formula() {
        // invariant edges occupy the top block: mean normalized rank is
        // (|Gc| - 1) / (2 (m - 1))
        let m = 10usize;
        let gc = 4usize;
        let truth: Vec<bool> = (0..m).map(|i| i < gc).collect();
        let scores: Vec<f64> = (0..m).map(|i| if i < gc { 5.0 - i as f64 * 0.1 } else { -(i as f64) }).collect();
        let (_, rank) = gc_rank_stats(&scores, &truth, &[(0, m)]).unwrap();
        let expect = (gc as f64 - 1.0) / (2.0 * (m as f64 - 1.0));
        assert!((rank - expect).abs() < 1e-12);
    }

    #[test]
    fn gc_rank_uniform_scores_average_near_half() {
        // equal scores rank by index; invariant positions shuffled across
        // many graphs average out near 1/2
        let mut rng = crate::rng::stream_rng(43, "metrics", &[]);
        let mut scores = Vec::new();
        let mut truth = Vec::new();
        let mut ranges = Vec::new();
        let m = 20;
        for g in 0..400 {
            let start = g * m;
            scores.extend(std::iter::repeat(0.5).take(m));
            let mut row = vec![false; m];
            let mut placed = 0;
            while placed < 5 {
                let i = rng.gen_range(0..m);
                if !row[i] {
                    row[i] = true;
                    placed += 1;
                }
            }
            truth.extend_from_slice(&row);
            ranges.push((start, start + m));
        }
        let (prob, rank) = gc_rank_stats(&scores, &truth, &ranges).unwrap();
        assert_eq!(prob, 0.5);
        assert!((rank - 0.5).abs() < 0.03);
    }

    #[test]
    fn ranking_metrics_invariant_to_score_translation() {
        let mut rng = crate::rng::stream_rng(44, "metrics", &[]);
        let m = 30;
        let scores: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        let shifted: Vec<f64> = scores.iter().map(|v| v + 17.5).collect();
        let truth: Vec<bool> = (0..m).map(|i| i % 4 == 0).collect();
        let ranges = [(0, m)];
        let correct = [true];

        assert_eq!(
            roc_auc(&scores, &truth).unwrap(),
            roc_auc(&shifted, &truth).unwrap()
        );
        assert_eq!(
            edge_auc(&scores, &truth, &ranges, &correct).unwrap().0,
            edge_auc(&shifted, &truth, &ranges, &correct).unwrap().0
        );
        assert_eq!(
            topk_edge_counts(&scores, &truth, &ranges, 1.5).unwrap(),
            topk_edge_counts(&shifted, &truth, &ranges, 1.5).unwrap()
        );
        let a = recall_precision_at_k(&scores, &truth, &ranges, 40.0).unwrap();
        let b = recall_precision_at_k(&shifted, &truth, &ranges, 40.0).unwrap();
        assert_eq!((a.recall, a.precision), (b.recall, b.precision));
        // rank statistic unaffected; the mean probability shifts with the
        // scores by definition
        let (_, ra) = gc_rank_stats(&scores, &truth, &ranges).unwrap();
        let (_, rb) = gc_rank_stats(&shifted, &truth, &ranges).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn precision_degrades_as_oracle_corrupts() {
        // progressively swap invariant edges into the bottom ranks
        let m = 20;
        let gc = 6;
        let truth: Vec<bool> = (0..m).map(|i| i < gc).collect();
        let mut scores: Vec<f64> = (0..m)
            .map(|i| if i < gc { 10.0 + i as f64 } else { -10.0 - i as f64 })
            .collect();
        let mut last = f64::INFINITY;
        for corrupt in 0..4 {
            if corrupt > 0 {
                scores[corrupt - 1] = -100.0 - corrupt as f64;
            }
            let rp = recall_precision_at_k(&scores, &truth, &[(0, m)], 30.0).unwrap();
            assert!(rp.precision <= last + 1e-12);
            last = rp.precision;
        }
        assert!(last < 1.0);
    }

    #[test]
    fn csv_schema_is_stable() {
        let report = MetricReport {
            accuracy: 0.9,
            roc_auc: None,
            edge_auc_all: Some(0.97),
            edge_auc_correct: Some(0.98),
            topk_counts: vec![(1.5, 5.5, 2.5)],
            recall_at_k: vec![(10.0, 0.2)],
            precision_at_k: vec![(10.0, 1.0)],
            mean_gc_prob: Some(0.8),
            mean_gc_rank: Some(0.2),
            vacuous_recall_graphs: 0,
        };
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "metric,key,value");
        assert_eq!(lines[1], "accuracy,,0.9");
        assert_eq!(lines[2], "edge_auc_all,,0.97");
        assert!(lines.contains(&"topk_invariant,1.5,5.5"));
        assert!(lines.contains(&"precision_at_k,10,1"));
    }
}
