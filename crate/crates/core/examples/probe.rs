use pruneood_core::synth::{generate, ShiftConfig, SplitKind};
use pruneood_core::trainer::{evaluate, train, MetricOptions, TrainConfig};
use pruneood_core::losses::LossWeights;
use std::time::Instant;

fn main() {
    let mut cfg_data = ShiftConfig::new(SplitKind::BaseCovariate, 7);
    cfg_data.base_size_ranges = [(7, 12), (7, 12), (7, 12)];
    let bundle = generate(&cfg_data).unwrap();
    for bs in [32usize, 64] {
        for seed in [1u64, 2, 3] {
            let cfg = TrainConfig {
                epochs: 60,
                pretrain_epochs: 60,
                batch_size: bs,
                weights: LossWeights { lambda1: 0.0, lambda2: 0.0, ..LossWeights::default() },
                seed,
                ..TrainConfig::default()
            };
            let t0 = Instant::now();
            let (ck, log) = train(&bundle, &cfg).unwrap();
            let report = evaluate(&ck, &bundle.test, &MetricOptions::default()).unwrap();
            println!(
                "bs={bs} seed={seed} ERM: ran={:2} best_e={:2} val={:.3} test={:.3} ({:.0?})",
                log.rows.len(), ck.epoch, ck.val_metric, report.accuracy, t0.elapsed()
            );
        }
    }
}
