//! Synthetic motif-on-base graph generator with controllable shifts.
//!
//! Each graph is a base structure (tree, ladder or wheel) with one motif
//! (cycle, house or crane) attached by a single bridge edge. The motif alone
//! determines the label; motif edges carry `edge_truth = true`, base and
//! bridge edges carry `false`. Node features are uninformative all-ones
//! vectors so the only signal is structural.
//!
//! Every graph draws from its own random stream seeded by
//! `(global seed, split, index)`, so output is identical however generation
//! is scheduled.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;
use crate::rng::stream_rng;

/// Feature dimension of generated node vectors.
pub const FEATURE_DIM: usize = 4;

/// Number of motif classes.
pub const NUM_CLASSES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotifKind {
    Cycle,
    House,
    Crane,
}

impl MotifKind {
    pub const ALL: [MotifKind; 3] = [MotifKind::Cycle, MotifKind::House, MotifKind::Crane];

    pub fn class_index(self) -> usize {
        match self {
            MotifKind::Cycle => 0,
            MotifKind::House => 1,
            MotifKind::Crane => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseKind {
    Tree,
    Ladder,
    Wheel,
}

impl BaseKind {
    pub const ALL: [BaseKind; 3] = [BaseKind::Tree, BaseKind::Ladder, BaseKind::Wheel];

    pub fn env_id(self) -> usize {
        match self {
            BaseKind::Tree => 0,
            BaseKind::Ladder => 1,
            BaseKind::Wheel => 2,
        }
    }

    /// Pairing used by the concept shift: each motif has a matched base.
    pub fn matched_motif(self) -> MotifKind {
        match self {
            BaseKind::Tree => MotifKind::Cycle,
            BaseKind::Ladder => MotifKind::House,
            BaseKind::Wheel => MotifKind::Crane,
        }
    }

    fn matched_base(motif: MotifKind) -> BaseKind {
        match motif {
            MotifKind::Cycle => BaseKind::Tree,
            MotifKind::House => BaseKind::Ladder,
            MotifKind::Crane => BaseKind::Wheel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitKind {
    /// Train/val bases from {Tree, Ladder}, test bases all Wheel.
    BaseCovariate,
    /// Same base kinds everywhere, base sizes grow from train to test.
    SizeCovariate,
    /// Base and motif co-occur with probability `bias` on the matched
    /// pairing in train, uniformly (1/3) in val and test.
    Concept,
}

/// Split names in file order.
pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub split_kind: SplitKind,
    /// Matched-pair probability for the concept shift; 1/3 is unbiased.
    pub bias: f64,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// Inclusive base node-count ranges per split (train, val, test).
    pub base_size_ranges: [(usize, usize); 3],
    pub seed: u64,
}

impl ShiftConfig {
    /// Desk-scale defaults for the given shift.
    pub fn new(split_kind: SplitKind, seed: u64) -> Self {
        let base_size_ranges = match split_kind {
            SplitKind::SizeCovariate => [(10, 20), (20, 30), (40, 60)],
            _ => [(10, 20), (10, 20), (10, 20)],
        };
        ShiftConfig {
            split_kind,
            bias: 1.0 / 3.0,
            train_size: 1500,
            val_size: 500,
            test_size: 500,
            base_size_ranges,
            seed,
        }
    }

    pub fn split_sizes(&self) -> [usize; 3] {
        [self.train_size, self.val_size, self.test_size]
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_size == 0 || self.val_size == 0 || self.test_size == 0 {
            return Err(Error::contract("split sizes must be positive"));
        }
        if self.split_kind == SplitKind::Concept
            && !(self.bias >= 1.0 / 3.0 - 1e-12 && self.bias < 1.0)
        {
            return Err(Error::contract(format!(
                "concept bias must lie in [1/3, 1), got {}",
                self.bias
            )));
        }
        for &(lo, hi) in &self.base_size_ranges {
            if lo < 4 {
                return Err(Error::contract("base sizes below 4 are not supported"));
            }
            if lo > hi {
                return Err(Error::contract(format!("empty base size range {lo}..={hi}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DatasetBundle {
    pub train: Vec<Graph>,
    pub val: Vec<Graph>,
    pub test: Vec<Graph>,
}

impl DatasetBundle {
    pub fn splits(&self) -> [&[Graph]; 3] {
        [&self.train, &self.val, &self.test]
    }
}

/// Connected structure-only fragment; node ids are local.
#[derive(Clone, Debug)]
pub struct Fragment {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

/// Build a base fragment of roughly `size` nodes (the ladder rounds up to an
/// even node count).
pub fn make_base(kind: BaseKind, size: usize, rng: &mut ChaCha8Rng) -> Result<Fragment> {
    if size < 4 {
        return Err(Error::contract(format!("base size must be at least 4, got {size}")));
    }
    Ok(match kind {
        BaseKind::Tree => {
            // uniformly random recursive tree
            let mut edges = Vec::with_capacity(size - 1);
            for v in 1..size {
                let parent = rng.gen_range(0..v);
                edges.push((parent, v));
            }
            Fragment { num_nodes: size, edges }
        }
        BaseKind::Ladder => {
            let rungs = size.div_ceil(2);
            let n = 2 * rungs;
            let mut edges = Vec::new();
            for i in 0..rungs - 1 {
                edges.push((i, i + 1));
                edges.push((rungs + i, rungs + i + 1));
            }
            for i in 0..rungs {
                edges.push((i, rungs + i));
            }
            Fragment { num_nodes: n, edges }
        }
        BaseKind::Wheel => {
            // hub 0, rim 1..size-1 with spokes
            let mut edges = Vec::new();
            for i in 1..size - 1 {
                edges.push((i, i + 1));
            }
            edges.push((1, size - 1));
            for i in 1..size {
                edges.push((0, i));
            }
            Fragment { num_nodes: size, edges }
        }
    })
}

/// Fixed motif templates. All motif edges belong to the invariant subgraph.
pub fn make_motif(kind: MotifKind) -> Fragment {
    match kind {
        MotifKind::Cycle => Fragment {
            num_nodes: 6,
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)],
        },
        MotifKind::House => Fragment {
            num_nodes: 5,
            edges: vec![(0, 1), (1, 2), (2, 3), (0, 3), (0, 4), (1, 4)],
        },
        MotifKind::Crane => Fragment {
            num_nodes: 5,
            edges: vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)],
        },
    }
}

/// Disjoint union of base and motif plus one uniformly random bridge edge.
/// Motif edges are marked invariant; base and bridge edges are not.
pub fn attach(
    base: &Fragment,
    motif: &Fragment,
    label: usize,
    env_id: usize,
    rng: &mut ChaCha8Rng,
) -> Graph {
    let num_nodes = base.num_nodes + motif.num_nodes;
    let mut edges = Vec::with_capacity(base.edges.len() + motif.edges.len() + 1);
    let mut truth = Vec::with_capacity(edges.capacity());
    for &(u, v) in &base.edges {
        edges.push((u, v));
        truth.push(false);
    }
    for &(u, v) in &motif.edges {
        edges.push((u + base.num_nodes, v + base.num_nodes));
        truth.push(true);
    }
    let bu = rng.gen_range(0..base.num_nodes);
    let bv = base.num_nodes + rng.gen_range(0..motif.num_nodes);
    edges.push((bu, bv));
    truth.push(false);

    Graph {
        num_nodes,
        feature_dim: FEATURE_DIM,
        features: vec![1.0; num_nodes * FEATURE_DIM],
        edges,
        label,
        edge_truth: Some(truth),
        env_id,
    }
}

fn pick_base(
    split: usize,
    kind: SplitKind,
    motif: MotifKind,
    bias: f64,
    rng: &mut ChaCha8Rng,
) -> BaseKind {
    match kind {
        SplitKind::BaseCovariate => {
            if split == 2 {
                BaseKind::Wheel
            } else if rng.gen_bool(0.5) {
                BaseKind::Tree
            } else {
                BaseKind::Ladder
            }
        }
        SplitKind::SizeCovariate => BaseKind::ALL[rng.gen_range(0..3)],
        SplitKind::Concept => {
            let b = if split == 0 { bias } else { 1.0 / 3.0 };
            let matched = BaseKind::matched_base(motif);
            if rng.gen_bool(b) {
                matched
            } else {
                // uniformly one of the two other bases
                let others: Vec<BaseKind> = BaseKind::ALL
                    .into_iter()
                    .filter(|&k| k != matched)
                    .collect();
                others[rng.gen_range(0..2)]
            }
        }
    }
}

fn generate_graph(cfg: &ShiftConfig, split: usize, index: usize) -> Result<Graph> {
    let mut rng = stream_rng(cfg.seed, "data", &[split as u64, index as u64]);
    let motif_kind = MotifKind::ALL[index % NUM_CLASSES];
    let base_kind = pick_base(split, cfg.split_kind, motif_kind, cfg.bias, &mut rng);
    let (lo, hi) = cfg.base_size_ranges[split];
    let size = rng.gen_range(lo..=hi);
    let base = make_base(base_kind, size, &mut rng)?;
    let motif = make_motif(motif_kind);
    Ok(attach(
        &base,
        &motif,
        motif_kind.class_index(),
        base_kind.env_id(),
        &mut rng,
    ))
}

/// Generate all three splits. Parallel per graph when the `parallel` feature
/// is enabled; output is identical to [`generate_sequential`].
pub fn generate(cfg: &ShiftConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let mut splits = Vec::with_capacity(3);
    for (si, &n) in cfg.split_sizes().iter().enumerate() {
        let graphs: Vec<Result<Graph>> = par::map_indexed(n, |i| generate_graph(cfg, si, i));
        splits.push(graphs.into_iter().collect::<Result<Vec<_>>>()?);
    }
    let mut it = splits.into_iter();
    Ok(DatasetBundle {
        train: it.next().unwrap(),
        val: it.next().unwrap(),
        test: it.next().unwrap(),
    })
}

/// Sequential reference path, kept for the benchmark comparison.
pub fn generate_sequential(cfg: &ShiftConfig) -> Result<DatasetBundle> {
    cfg.validate()?;
    let mut splits = Vec::with_capacity(3);
    for (si, &n) in cfg.split_sizes().iter().enumerate() {
        let graphs: Vec<Result<Graph>> = par::map_indexed_seq(n, |i| generate_graph(cfg, si, i));
        splits.push(graphs.into_iter().collect::<Result<Vec<_>>>()?);
    }
    let mut it = splits.into_iter();
    Ok(DatasetBundle {
        train: it.next().unwrap(),
        val: it.next().unwrap(),
        test: it.next().unwrap(),
    })
}

/// Summary statistics for one split, written to the stats sidecar.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitStats {
    pub num_graphs: usize,
    pub class_counts: [usize; 3],
    pub base_counts: [usize; 3],
    /// `cooccurrence[base][motif]` counts.
    pub cooccurrence: [[usize; 3]; 3],
    /// Fraction of graphs whose base is the matched partner of their motif.
    pub matched_pair_frequency: f64,
    pub node_count_min: usize,
    pub node_count_max: usize,
    pub node_count_mean: f64,
    pub edge_count_mean: f64,
    pub invariant_edge_fraction_mean: f64,
}

pub fn split_stats(graphs: &[Graph]) -> SplitStats {
    let mut class_counts = [0usize; 3];
    let mut base_counts = [0usize; 3];
    let mut cooccurrence = [[0usize; 3]; 3];
    let mut matched = 0usize;
    let mut nmin = usize::MAX;
    let mut nmax = 0usize;
    let mut nsum = 0usize;
    let mut esum = 0usize;
    let mut frac_sum = 0.0;
    for g in graphs {
        class_counts[g.label] += 1;
        base_counts[g.env_id] += 1;
        cooccurrence[g.env_id][g.label] += 1;
        if BaseKind::ALL[g.env_id].matched_motif().class_index() == g.label {
            matched += 1;
        }
        nmin = nmin.min(g.num_nodes);
        nmax = nmax.max(g.num_nodes);
        nsum += g.num_nodes;
        esum += g.num_edges();
        if let Some(t) = &g.edge_truth {
            let inv = t.iter().filter(|&&b| b).count();
            frac_sum += inv as f64 / t.len() as f64;
        }
    }
    let n = graphs.len().max(1) as f64;
    SplitStats {
        num_graphs: graphs.len(),
        class_counts,
        base_counts,
        cooccurrence,
        matched_pair_frequency: matched as f64 / n,
        node_count_min: nmin,
        node_count_max: nmax,
        node_count_mean: nsum as f64 / n,
        edge_count_mean: esum as f64 / n,
        invariant_edge_fraction_mean: frac_sum / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::io::dataset_to_string;

    fn rng(salt: u64) -> ChaCha8Rng {
        stream_rng(99, "synth-test", &[salt])
    }

    fn degrees(f: &Fragment) -> Vec<usize> {
        let mut d = vec![0usize; f.num_nodes];
        for &(u, v) in &f.edges {
            d[u] += 1;
            d[v] += 1;
        }
        d
    }

    fn is_connected(num_nodes: usize, edges: &[(usize, usize)]) -> bool {
        let mut adj = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; num_nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    #[test]
    fn wheel_of_five_has_eight_edges() {
        let f = make_base(BaseKind::Wheel, 5, &mut rng(0)).unwrap();
        assert_eq!(f.num_nodes, 5);
        assert_eq!(f.edges.len(), 8);
        assert!(is_connected(f.num_nodes, &f.edges));
    }

    #[test]
    fn ladder_of_six_has_seven_edges() {
        let f = make_base(BaseKind::Ladder, 6, &mut rng(1)).unwrap();
        assert_eq!(f.num_nodes, 6);
        assert_eq!(f.edges.len(), 7);
        assert!(is_connected(f.num_nodes, &f.edges));
    }

    #[test]
    fn trees_have_n_minus_one_edges_and_connect() {
        for (salt, n) in [(2u64, 4usize), (3, 9), (4, 17)] {
            let f = make_base(BaseKind::Tree, n, &mut rng(salt)).unwrap();
            assert_eq!(f.edges.len(), n - 1);
            assert!(is_connected(f.num_nodes, &f.edges));
        }
    }

    #[test]
    fn base_size_below_four_rejected() {
        assert!(make_base(BaseKind::Tree, 3, &mut rng(5)).is_err());
    }

    #[test]
    fn house_template() {
        let f = make_motif(MotifKind::House);
        assert_eq!(f.num_nodes, 5);
        assert_eq!(f.edges.len(), 6);
        assert!(is_connected(f.num_nodes, &f.edges));
    }

    #[test]
    fn cycle_nodes_all_have_degree_two() {
        let f = make_motif(MotifKind::Cycle);
        assert!(degrees(&f).iter().all(|&d| d == 2));
    }

    #[test]
    fn crane_degree_sequence_from_template() {
        // from the edge list (0,1),(1,2),(0,2),(2,3),(3,4)
        let f = make_motif(MotifKind::Crane);
        let mut d = degrees(&f);
        d.sort_unstable();
        assert_eq!(d, vec![1, 2, 2, 2, 3]);
    }

    #[test]
    fn attach_counts_and_connectivity() {
        let base = make_base(BaseKind::Tree, 11, &mut rng(6)).unwrap();
        assert_eq!(base.edges.len(), 10);
        let motif = make_motif(MotifKind::House);
        let g = attach(&base, &motif, 1, 0, &mut rng(7));
        assert_eq!(g.num_edges(), 10 + 6 + 1);
        let truth = g.edge_truth.as_ref().unwrap();
        assert_eq!(truth.iter().filter(|&&b| b).count(), motif.edges.len());
        assert!(is_connected(g.num_nodes, &g.edges));
        g.validate().unwrap();
    }

    #[test]
    fn house_on_size_15_tree_has_expected_invariant_fraction() {
        let base = make_base(BaseKind::Tree, 15, &mut rng(8)).unwrap();
        let g = attach(&base, &make_motif(MotifKind::House), 1, 0, &mut rng(9));
        let truth = g.edge_truth.as_ref().unwrap();
        let inv = truth.iter().filter(|&&b| b).count();
        assert_eq!((inv, g.num_edges()), (6, 21));
    }

    #[test]
    fn generated_graphs_validate_and_balance_classes() {
        let mut cfg = ShiftConfig::new(SplitKind::BaseCovariate, 13);
        cfg.train_size = 90;
        cfg.val_size = 31;
        cfg.test_size = 32;
        let bundle = generate(&cfg).unwrap();
        for split in bundle.splits() {
            let stats = split_stats(split);
            let n = split.len();
            for &c in &stats.class_counts {
                assert!((c as i64 - (n / 3) as i64).abs() <= 1);
            }
            for g in split {
                g.validate_with_classes(NUM_CLASSES).unwrap();
                // label is a function of the motif template only
                let inv = g.edge_truth.as_ref().unwrap().iter().filter(|&&b| b).count();
                let expected = match g.label {
                    0 | 1 => 6,
                    _ => 5,
                };
                assert_eq!(inv, expected);
            }
        }
        // test split is all wheels, train has none
        assert!(bundle.test.iter().all(|g| g.env_id == BaseKind::Wheel.env_id()));
        assert!(bundle.train.iter().all(|g| g.env_id != BaseKind::Wheel.env_id()));
    }

    #[test]
    fn size_covariate_ranges_respected() {
        let mut cfg = ShiftConfig::new(SplitKind::SizeCovariate, 21);
        cfg.train_size = 45;
        cfg.val_size = 15;
        cfg.test_size = 15;
        let bundle = generate(&cfg).unwrap();
        // motif adds 5 or 6 nodes on top of the base; ladder may add one more
        for g in &bundle.test {
            assert!(g.num_nodes >= 40 + 5);
            assert!(g.num_nodes <= 61 + 6);
        }
        for g in &bundle.train {
            assert!(g.num_nodes <= 21 + 6);
        }
    }

    #[test]
    fn concept_unbiased_cooccurrence_is_uniform() {
        let mut cfg = ShiftConfig::new(SplitKind::Concept, 17);
        cfg.bias = 1.0 / 3.0;
        cfg.train_size = 3000;
        cfg.val_size = 60;
        cfg.test_size = 60;
        let bundle = generate(&cfg).unwrap();
        let stats = split_stats(&bundle.train);
        // matched frequency ~ Binomial(n, 1/3): allow 3 sigma
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / 3000.0f64).sqrt();
        assert!((stats.matched_pair_frequency - 1.0 / 3.0).abs() < 3.0 * sigma + 1e-9);
    }

    #[test]
    fn concept_biased_cooccurrence_tracks_bias() {
        let mut cfg = ShiftConfig::new(SplitKind::Concept, 19);
        cfg.bias = 0.9;
        cfg.train_size = 3000;
        cfg.val_size = 300;
        cfg.test_size = 300;
        let bundle = generate(&cfg).unwrap();
        assert!((split_stats(&bundle.train).matched_pair_frequency - 0.9).abs() < 0.02);
        // val and test stay unbiased
        let val_freq = split_stats(&bundle.val).matched_pair_frequency;
        assert!((val_freq - 1.0 / 3.0).abs() < 0.1);
    }

    #[test]
    fn same_config_and_seed_is_byte_identical() {
        let mut cfg = ShiftConfig::new(SplitKind::BaseCovariate, 23);
        cfg.train_size = 40;
        cfg.val_size = 10;
        cfg.test_size = 10;
        let a = generate(&cfg).unwrap();
        let b = generate_sequential(&cfg).unwrap();
        for (x, y) in a.splits().iter().zip(b.splits().iter()) {
            assert_eq!(
                dataset_to_string(x).unwrap(),
                dataset_to_string(y).unwrap()
            );
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = ShiftConfig::new(SplitKind::Concept, 1);
        cfg.bias = 0.2;
        assert!(cfg.validate().is_err());
        let mut cfg2 = ShiftConfig::new(SplitKind::BaseCovariate, 1);
        cfg2.train_size = 0;
        assert!(cfg2.validate().is_err());
        let mut cfg3 = ShiftConfig::new(SplitKind::BaseCovariate, 1);
        cfg3.base_size_ranges[0] = (3, 10);
        assert!(cfg3.validate().is_err());
    }
}
