//! Graph and batch data model.
//!
//! Graphs are undirected; each edge `(u, v)` with `u < v` is stored once.
//! The optional `edge_truth` mask marks the edges of the stable subgraph
//! that determines the label. Graphs and batches are immutable after
//! construction and safe to share across threads.

pub mod io;

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub num_nodes: usize,
    pub feature_dim: usize,
    /// Row-major `num_nodes x feature_dim`.
    pub features: Vec<f64>,
    /// Undirected edges `(u, v)` with `u < v`, each stored once.
    pub edges: Vec<(usize, usize)>,
    /// Class index in `[0, C)`.
    pub label: usize,
    /// Per-edge flag, true when the edge belongs to the invariant subgraph.
    pub edge_truth: Option<Vec<bool>>,
    /// Environment tag (which base family the graph was built from).
    pub env_id: usize,
}

impl Graph {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Check every structural invariant, naming the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.num_nodes == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        if self.features.len() != self.num_nodes * self.feature_dim {
            return Err(Error::InvalidGraph(format!(
                "feature length {} does not match {} nodes x {} dims",
                self.features.len(),
                self.num_nodes,
                self.feature_dim
            )));
        }
        let mut seen = HashSet::new();
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop ({u},{v}) at edge {i}")));
            }
            if u > v {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} not stored with u < v: ({u},{v})"
                )));
            }
            if v >= self.num_nodes {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} endpoint {v} out of range for {} nodes",
                    self.num_nodes
                )));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u},{v}) at {i}")));
            }
        }
        if let Some(truth) = &self.edge_truth {
            if truth.len() != self.edges.len() {
                return Err(Error::InvalidGraph(format!(
                    "edge_truth length {} does not match {} edges",
                    truth.len(),
                    self.edges.len()
                )));
            }
        }
        Ok(())
    }

    /// [`Graph::validate`] plus the label bound for a declared class count.
    pub fn validate_with_classes(&self, num_classes: usize) -> Result<()> {
        self.validate()?;
        if self.label >= num_classes {
            return Err(Error::InvalidGraph(format!(
                "label {} out of range for {} classes",
                self.label, num_classes
            )));
        }
        Ok(())
    }
}

/// Disjoint union of graphs with node indices offset per member.
///
/// The directed index triples expand each undirected edge into both
/// directions for message passing; `directed_to_undirected` maps a directed
/// slot back to its undirected edge so both directions share one weight.
#[derive(Clone, Debug)]
pub struct Batch {
    pub num_graphs: usize,
    pub total_nodes: usize,
    pub feature_dim: usize,
    pub features: Vec<f64>,
    /// Global edge list, endpoints offset per graph, still `u < v`.
    pub edges: Vec<(usize, usize)>,
    pub node_to_graph: Arc<Vec<usize>>,
    pub edge_to_graph: Arc<Vec<usize>>,
    /// Per-graph `[start, end)` into `edges`.
    pub edge_ranges: Vec<(usize, usize)>,
    /// Per-graph `[start, end)` into node indices.
    pub node_ranges: Vec<(usize, usize)>,
    pub labels: Vec<usize>,
    pub env_ids: Vec<usize>,
    pub edge_truth: Option<Vec<bool>>,
    /// Source node per directed edge slot (2 slots per undirected edge).
    pub directed_src: Arc<Vec<usize>>,
    pub directed_dst: Arc<Vec<usize>>,
    pub directed_to_undirected: Arc<Vec<usize>>,
    /// First endpoints of the undirected edges, for per-edge gathers.
    pub edge_u: Arc<Vec<usize>>,
    pub edge_v: Arc<Vec<usize>>,
}

impl Batch {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge count of one member graph.
    pub fn graph_edge_count(&self, g: usize) -> usize {
        let (s, e) = self.edge_ranges[g];
        e - s
    }
}

/// Build the disjoint-union batch. All graphs must share the feature
/// dimension, and either all or none carry `edge_truth`.
pub fn batch_graphs(graphs: &[&Graph]) -> Result<Batch> {
    if graphs.is_empty() {
        return Err(Error::contract("batch_graphs requires at least one graph"));
    }
    let feature_dim = graphs[0].feature_dim;
    for (i, g) in graphs.iter().enumerate() {
        if g.feature_dim != feature_dim {
            return Err(Error::contract(format!(
                "graph {i} feature dim {} differs from {feature_dim}",
                g.feature_dim
            )));
        }
    }
    let with_truth = graphs.iter().filter(|g| g.edge_truth.is_some()).count();
    if with_truth != 0 && with_truth != graphs.len() {
        return Err(Error::contract(
            "mixed edge_truth presence across graphs in one batch",
        ));
    }

    let total_nodes: usize = graphs.iter().map(|g| g.num_nodes).sum();
    let total_edges: usize = graphs.iter().map(|g| g.num_edges()).sum();

    let mut features = Vec::with_capacity(total_nodes * feature_dim);
    let mut edges = Vec::with_capacity(total_edges);
    let mut node_to_graph = Vec::with_capacity(total_nodes);
    let mut edge_to_graph = Vec::with_capacity(total_edges);
    let mut edge_ranges = Vec::with_capacity(graphs.len());
    let mut node_ranges = Vec::with_capacity(graphs.len());
    let mut labels = Vec::with_capacity(graphs.len());
    let mut env_ids = Vec::with_capacity(graphs.len());
    let mut edge_truth = if with_truth > 0 {
        Some(Vec::with_capacity(total_edges))
    } else {
        None
    };

    let mut node_off = 0;
    for (gi, g) in graphs.iter().enumerate() {
        features.extend_from_slice(&g.features);
        node_to_graph.extend(std::iter::repeat(gi).take(g.num_nodes));
        node_ranges.push((node_off, node_off + g.num_nodes));
        let estart = edges.len();
        for &(u, v) in &g.edges {
            edges.push((u + node_off, v + node_off));
            edge_to_graph.push(gi);
        }
        edge_ranges.push((estart, edges.len()));
        labels.push(g.label);
        env_ids.push(g.env_id);
        if let (Some(out), Some(t)) = (edge_truth.as_mut(), g.edge_truth.as_ref()) {
            out.extend_from_slice(t);
        }
        node_off += g.num_nodes;
    }

    let mut directed_src = Vec::with_capacity(2 * total_edges);
    let mut directed_dst = Vec::with_capacity(2 * total_edges);
    let mut directed_to_undirected = Vec::with_capacity(2 * total_edges);
    let mut edge_u = Vec::with_capacity(total_edges);
    let mut edge_v = Vec::with_capacity(total_edges);
    for (k, &(u, v)) in edges.iter().enumerate() {
        directed_src.push(u);
        directed_dst.push(v);
        directed_to_undirected.push(k);
        directed_src.push(v);
        directed_dst.push(u);
        directed_to_undirected.push(k);
        edge_u.push(u);
        edge_v.push(v);
    }

    Ok(Batch {
        num_graphs: graphs.len(),
        total_nodes,
        feature_dim,
        features,
        edges,
        node_to_graph: Arc::new(node_to_graph),
        edge_to_graph: Arc::new(edge_to_graph),
        edge_ranges,
        node_ranges,
        labels,
        env_ids,
        edge_truth,
        directed_src: Arc::new(directed_src),
        directed_dst: Arc::new(directed_dst),
        directed_to_undirected: Arc::new(directed_to_undirected),
        edge_u: Arc::new(edge_u),
        edge_v: Arc::new(edge_v),
    })
}

/// Recover the member graphs, field for field.
pub fn unbatch(batch: &Batch) -> Vec<Graph> {
    let mut out = Vec::with_capacity(batch.num_graphs);
    for gi in 0..batch.num_graphs {
        let (ns, ne) = batch.node_ranges[gi];
        let (es, ee) = batch.edge_ranges[gi];
        let d = batch.feature_dim;
        out.push(Graph {
            num_nodes: ne - ns,
            feature_dim: d,
            features: batch.features[ns * d..ne * d].to_vec(),
            edges: batch.edges[es..ee]
                .iter()
                .map(|&(u, v)| (u - ns, v - ns))
                .collect(),
            label: batch.labels[gi],
            edge_truth: batch
                .edge_truth
                .as_ref()
                .map(|t| t[es..ee].to_vec()),
            env_id: batch.env_ids[gi],
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph {
            num_nodes: 3,
            feature_dim: 2,
            features: vec![1.0; 6],
            edges: vec![(0, 1), (0, 2), (1, 2)],
            label: 0,
            edge_truth: Some(vec![true, false, true]),
            env_id: 1,
        }
    }

    #[test]
    fn triangle_validates() {
        triangle().validate().unwrap();
    }

    #[test]
    fn self_loop_rejected() {
        let mut g = triangle();
        g.edges[1] = (2, 2);
        let err = g.validate().unwrap_err().to_string();
        assert!(err.contains("self-loop"), "{err}");
    }

    #[test]
    fn truth_length_mismatch_rejected() {
        let mut g = triangle();
        g.edge_truth = Some(vec![true]);
        let err = g.validate().unwrap_err().to_string();
        assert!(err.contains("edge_truth length"), "{err}");
    }

    #[test]
    fn label_bound_checked_against_class_count() {
        let g = triangle();
        g.validate_with_classes(1).unwrap();
        let mut g2 = triangle();
        g2.label = 3;
        assert!(g2.validate_with_classes(3).is_err());
    }

    #[test]
    fn two_triangles_batch() {
        let (a, b) = (triangle(), triangle());
        let batch = batch_graphs(&[&a, &b]).unwrap();
        assert_eq!(batch.total_nodes, 6);
        assert_eq!(batch.num_edges(), 6);
        assert_eq!(batch.node_to_graph.as_slice(), &[0, 0, 0, 1, 1, 1]);
        assert_eq!(batch.edges[3], (3, 4));
    }

    #[test]
    fn single_graph_batches_with_zero_offsets() {
        let g = triangle();
        let batch = batch_graphs(&[&g]).unwrap();
        assert_eq!(batch.edges, g.edges);
        assert_eq!(unbatch(&batch), vec![g]);
    }

    #[test]
    fn offsets_accumulate_across_three_graphs() {
        let mk = |n: usize| Graph {
            num_nodes: n,
            feature_dim: 1,
            features: vec![1.0; n],
            edges: (0..n - 1).map(|i| (i, i + 1)).collect(),
            label: 0,
            edge_truth: None,
            env_id: 0,
        };
        let (a, b, c) = (mk(2), mk(3), mk(4));
        let batch = batch_graphs(&[&a, &b, &c]).unwrap();
        // second graph offset by 2, third by 5
        assert_eq!(batch.edges[1], (2, 3));
        assert_eq!(batch.edges[3], (5, 6));
    }

    #[test]
    fn empty_and_mismatched_batches_rejected() {
        assert!(batch_graphs(&[]).is_err());
        let a = triangle();
        let mut b = triangle();
        b.feature_dim = 3;
        b.features = vec![0.0; 9];
        assert!(batch_graphs(&[&a, &b]).is_err());
    }

    #[test]
    fn directed_expansion_covers_both_directions() {
        let g = triangle();
        let batch = batch_graphs(&[&g]).unwrap();
        assert_eq!(batch.directed_src.len(), 6);
        assert_eq!(batch.directed_src[0], 0);
        assert_eq!(batch.directed_dst[0], 1);
        assert_eq!(batch.directed_src[1], 1);
        assert_eq!(batch.directed_dst[1], 0);
        assert_eq!(batch.directed_to_undirected.as_slice(), &[0, 0, 1, 1, 2, 2]);
    }
}
