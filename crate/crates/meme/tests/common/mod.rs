#![allow(dead_code)]

use meme_core::pipeline::{extract_pipeline, KChoice, PipelineConfig};
use meme_core::rnn::{forward_trace, ForwardTraceConfig, LstmStackWeights};
use meme_core::{ClassifierKind, ExtractedModel, FeatureSchema, Matrix, SplitTag, TraceDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// Single-layer LSTM with uniform random weights.
pub fn random_lstm(rng: &mut ChaCha8Rng, n: usize, units: usize) -> LstmStackWeights {
    let mut w = LstmStackWeights::zeros(n, &[units]);
    let layer = &mut w.layers[0];
    layer.kernel = random_matrix(rng, n, 4 * units, 1.0);
    layer.recurrent = random_matrix(rng, units, 4 * units, 1.0);
    layer.bias = (0..4 * units).map(|_| rng.random_range(-0.5..0.5)).collect();
    w.head.kernel = random_matrix(rng, units, 1, 3.0);
    w
}

/// Traces of a random LSTM over uniform inputs in `[0, 1)`.
pub fn random_traces(seed: u64, n: usize, sequences: usize, length: usize) -> TraceDataset {
    let mut rng = rng(seed);
    let weights = random_lstm(&mut rng, n, 4);
    let cfg = ForwardTraceConfig::last_layer(&weights);
    let names: Vec<String> = (0..n).map(|j| format!("f{j}")).collect();
    let schema = FeatureSchema::continuous(&names, "negative", "positive").unwrap();
    let seqs = (0..sequences)
        .map(|_| {
            let inputs = random_matrix(&mut rng, length, n, 1.0);
            forward_trace(&weights, &inputs, &cfg).unwrap()
        })
        .collect();
    TraceDataset::new(schema, seqs, SplitTag::Train).unwrap()
}

pub fn small_mlp(cfg: &mut PipelineConfig) {
    cfg.train.kind = ClassifierKind::Mlp;
    cfg.train.mlp.hidden = vec![8, 4];
    cfg.train.mlp.epochs = 3;
}

/// A model extracted from random LSTM traces with random k, window and classifier kind.
pub fn random_model(seed: u64) -> (ExtractedModel, TraceDataset) {
    let mut r = rng(seed ^ 0x5eed);
    let n = r.random_range(1..=3);
    let ds = random_traces(seed, n, 12, 15);
    let mut cfg = PipelineConfig {
        k: KChoice::Fixed(r.random_range(1..=4)),
        window: r.random_range(0..=3),
        seed,
        ..PipelineConfig::default()
    };
    cfg.train.tree.max_depth = r.random_range(1..=4);
    if r.random_bool(0.3) {
        small_mlp(&mut cfg);
    }
    (extract_pipeline(&cfg, &ds).unwrap(), ds)
}

/// Random input sequences for `model`, lengths in `w+1 ..= w+max_extra`.
pub fn random_inputs(rng: &mut ChaCha8Rng, model: &ExtractedModel, count: usize, max_extra: usize) -> Vec<Matrix> {
    (0..count)
        .map(|_| {
            let len = model.window + rng.random_range(1..=max_extra);
            random_matrix(rng, len, model.input_width(), 1.5)
        })
        .collect()
}
