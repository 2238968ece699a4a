//! Checkpoint file format.
//!
//! A versioned text container: the `pruneood-ckpt v1` header, scalar
//! metadata, the training and architecture configs as single-line JSON, then
//! one named parameter array per block. Floats print in shortest
//! round-trippable form, so save/load reproduces parameters bit for bit.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ArchConfig, ParamSet};
use crate::trainer::TrainConfig;

pub const CHECKPOINT_HEADER: &str = "pruneood-ckpt v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    /// Epoch the parameters were captured at.
    pub epoch: usize,
    /// Validation metric at that epoch.
    pub val_metric: f64,
    pub config: TrainConfig,
    pub arch: ArchConfig,
    pub params: ParamSet,
}

impl Checkpoint {
    /// Whether evaluation should run the selector: pure cross-entropy runs
    /// (pretraining covering every epoch) never touch it.
    pub fn uses_selector(&self) -> bool {
        self.config.pretrain_epochs < self.config.epochs
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = String::from(CHECKPOINT_HEADER);
        out.push('\n');
        out.push_str(&format!("epoch {}\n", self.epoch));
        out.push_str(&format!("val_metric {:?}\n", self.val_metric));
        let cfg = serde_json::to_string(&self.config)
            .map_err(|e| Error::format(format!("serialize config: {e}")))?;
        out.push_str(&format!("config {cfg}\n"));
        let arch = serde_json::to_string(&self.arch)
            .map_err(|e| Error::format(format!("serialize arch: {e}")))?;
        out.push_str(&format!("arch {arch}\n"));
        out.push_str(&format!("params {}\n", self.params.len()));
        for p in self.params.params() {
            out.push_str(&format!("param {} {}", p.name, p.shape.len()));
            for d in &p.shape {
                out.push_str(&format!(" {d}"));
            }
            out.push('\n');
            let mut first = true;
            for v in &p.data {
                if !first {
                    out.push(' ');
                }
                out.push_str(&format!("{v:?}"));
                first = false;
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let bad = |msg: &str| Error::format(format!("checkpoint: {msg}"));
        match lines.next() {
            Some(h) if h == CHECKPOINT_HEADER => {}
            Some(h) => {
                return Err(Error::format(format!(
                    "unsupported checkpoint header {h:?}, expected {CHECKPOINT_HEADER:?}"
                )))
            }
            None => return Err(bad("empty file")),
        }
        let field = |line: Option<&str>, key: &str| -> Result<String> {
            let line = line.ok_or_else(|| bad(&format!("missing {key}")))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected `{key} ...`, got {line:?}")))
        };
        let epoch: usize = field(lines.next(), "epoch")?
            .parse()
            .map_err(|e| bad(&format!("epoch: {e}")))?;
        let val_metric: f64 = field(lines.next(), "val_metric")?
            .parse()
            .map_err(|e| bad(&format!("val_metric: {e}")))?;
        let config: TrainConfig = serde_json::from_str(&field(lines.next(), "config")?)
            .map_err(|e| bad(&format!("config: {e}")))?;
        let arch: ArchConfig = serde_json::from_str(&field(lines.next(), "arch")?)
            .map_err(|e| bad(&format!("arch: {e}")))?;
        let count: usize = field(lines.next(), "params")?
            .parse()
            .map_err(|e| bad(&format!("params count: {e}")))?;

        let mut params = ParamSet::new();
        for _ in 0..count {
            let head = field(lines.next(), "param")?;
            let mut toks = head.split_whitespace();
            let name = toks.next().ok_or_else(|| bad("param without name"))?.to_string();
            let rank: usize = toks
                .next()
                .ok_or_else(|| bad("param without rank"))?
                .parse()
                .map_err(|e| bad(&format!("param rank: {e}")))?;
            let shape: Vec<usize> = toks
                .map(|t| t.parse().map_err(|e| bad(&format!("param dim: {e}"))))
                .collect::<Result<_>>()?;
            if shape.len() != rank {
                return Err(bad(&format!("param {name}: rank {rank} but {} dims", shape.len())));
            }
            let data_line = lines.next().ok_or_else(|| bad("missing param data"))?;
            let data: Vec<f64> = data_line
                .split_whitespace()
                .map(|t| t.parse().map_err(|e| bad(&format!("param value: {e}"))))
                .collect::<Result<_>>()?;
            if data.len() != shape.iter().product::<usize>() {
                return Err(bad(&format!(
                    "param {name}: {} values for shape {shape:?}",
                    data.len()
                )));
            }
            params.push(name, shape, data);
        }
        Ok(Checkpoint { epoch, val_metric, config, arch, params })
    }

    /// Write atomically: serialize to a sibling temp file, then rename, so
    /// an interrupted run never leaves a truncated checkpoint behind.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_text()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, GnnKind};
    use crate::rng::stream_rng;
    use crate::trainer::TrainConfig;

    fn sample() -> Checkpoint {
        let arch = ArchConfig {
            feature_dim: 4,
            num_classes: 3,
            encoder_kind: GnnKind::Gin,
            encoder_layers: 2,
            hidden: 6,
            selector_kind: GnnKind::Gcn,
            selector_layers: 1,
            selector_hidden: 5,
        };
        let params = init_params(&arch, &mut stream_rng(7, "init", &[])).unwrap();
        Checkpoint {
            epoch: 17,
            val_metric: 0.8125,
            config: TrainConfig::default(),
            arch,
            params,
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let ck = sample();
        let text = ck.to_text().unwrap();
        let back = Checkpoint::from_text(&text).unwrap();
        assert_eq!(back, ck);
        for (a, b) in ck.params.params().iter().zip(back.params.params()) {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn file_round_trip_and_no_temp_left_behind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("best.ckpt");
        let ck = sample();
        ck.save(&path).unwrap();
        assert!(!path.with_extension("tmp").exists());
        assert_eq!(Checkpoint::load(&path).unwrap(), ck);
    }

    #[test]
    fn extreme_floats_survive() {
        let mut ck = sample();
        let i = ck.params.index_of("clf.b").unwrap();
        ck.params.params_mut()[i].data = vec![1e-308, -3.5e300, 0.1 + 0.2];
        let back = Checkpoint::from_text(&ck.to_text().unwrap()).unwrap();
        let b = &back.params.get("clf.b").unwrap().data;
        assert_eq!(b[0].to_bits(), 1e-308f64.to_bits());
        assert_eq!(b[1].to_bits(), (-3.5e300f64).to_bits());
        assert_eq!(b[2].to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(Checkpoint::from_text("pruneood-ckpt v2\n").is_err());
    }
}
