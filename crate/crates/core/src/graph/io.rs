//! Dataset file format.
//!
//! One file per split: a header line `pruneood-dataset v1` followed by one
//! JSON record per line. Record fields: `num_nodes`, `features` (row-major
//! list), `edges` (pair list), `label`, `edge_truth` (optional 0/1 list),
//! `env_id`. Writing is deterministic, so identical inputs give
//! byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

pub const DATASET_HEADER: &str = "pruneood-dataset v1";

#[derive(Serialize, Deserialize)]
struct RecordV1 {
    num_nodes: usize,
    features: Vec<f64>,
    edges: Vec<(usize, usize)>,
    label: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    edge_truth: Option<Vec<u8>>,
    env_id: usize,
}

impl RecordV1 {
    fn from_graph(g: &Graph) -> Self {
        RecordV1 {
            num_nodes: g.num_nodes,
            features: g.features.clone(),
            edges: g.edges.clone(),
            label: g.label,
            edge_truth: g
                .edge_truth
                .as_ref()
                .map(|t| t.iter().map(|&b| b as u8).collect()),
            env_id: g.env_id,
        }
    }

    fn into_graph(self) -> Result<Graph> {
        if self.num_nodes == 0 {
            return Err(Error::format("record with zero nodes"));
        }
        if self.features.len() % self.num_nodes != 0 {
            return Err(Error::format(format!(
                "feature list length {} not divisible by {} nodes",
                self.features.len(),
                self.num_nodes
            )));
        }
        let g = Graph {
            feature_dim: self.features.len() / self.num_nodes,
            num_nodes: self.num_nodes,
            features: self.features,
            edges: self.edges,
            label: self.label,
            edge_truth: self
                .edge_truth
                .map(|t| t.into_iter().map(|b| b != 0).collect()),
            env_id: self.env_id,
        };
        g.validate()?;
        Ok(g)
    }
}

/// Serialize graphs to the line-delimited v1 format.
pub fn dataset_to_string(graphs: &[Graph]) -> Result<String> {
    let mut out = String::from(DATASET_HEADER);
    out.push('\n');
    for g in graphs {
        let rec = RecordV1::from_graph(g);
        let line = serde_json::to_string(&rec)
            .map_err(|e| Error::format(format!("serialize record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, graphs: &[Graph]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(dataset_to_string(graphs)?.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Parse a dataset file, validating every record.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<Graph>> {
    let r = BufReader::new(File::open(path.as_ref())?);
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h == DATASET_HEADER => {}
        Some(Ok(h)) => {
            return Err(Error::format(format!(
                "unsupported dataset header {h:?}, expected {DATASET_HEADER:?}"
            )))
        }
        _ => return Err(Error::format("missing dataset header")),
    }
    let mut graphs = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordV1 = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("line {}: {e}", lineno + 2)))?;
        graphs.push(
            rec.into_graph()
                .map_err(|e| Error::format(format!("line {}: {e}", lineno + 2)))?,
        );
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Graph> {
        vec![
            Graph {
                num_nodes: 3,
                feature_dim: 2,
                features: vec![1.0; 6],
                edges: vec![(0, 1), (1, 2)],
                label: 2,
                edge_truth: Some(vec![true, false]),
                env_id: 0,
            },
            Graph {
                num_nodes: 2,
                feature_dim: 2,
                features: vec![0.5, -1.25, 3.0, 0.0],
                edges: vec![(0, 1)],
                label: 0,
                edge_truth: None,
                env_id: 2,
            },
        ]
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let graphs = sample();
        write_dataset(&path, &graphs).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), graphs);
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = dataset_to_string(&sample()).unwrap();
        let b = dataset_to_string(&sample()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "pruneood-dataset v9\n").unwrap();
        let err = read_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("header"), "{err}");
    }

    #[test]
    fn bad_record_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, format!("{DATASET_HEADER}\n{{\"nope\":1}}\n")).unwrap();
        let err = read_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
