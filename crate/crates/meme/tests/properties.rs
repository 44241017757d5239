mod common;

use std::path::Path;

use meme::model_file::{model_from_str, model_to_string};
use meme::traces::{decode_binary, decode_jsonl, encode_binary, encode_jsonl};
use meme_core::automaton::{classify_batch, classify_dataset, classify_sequence};
use meme_core::pipeline::{extract_pipeline, KChoice, PipelineConfig};
use meme_core::{EmitOrder, FeatureSchema, Label, Matrix, SplitTag, TraceDataset, TracedSequence};
use proptest::prelude::*;
use rand::Rng;

fn arbitrary_dataset(seed: u64) -> TraceDataset {
    let mut r = common::rng(seed);
    let n = r.random_range(1..=4);
    let m = r.random_range(1..=4);
    let names: Vec<String> = (0..n).map(|j| format!("c{j}")).collect();
    let schema = FeatureSchema::continuous(&names, "a", "b").unwrap();
    let count = r.random_range(1..=4);
    let seqs = (0..count)
        .map(|_| {
            let t = r.random_range(1..=6);
            let labels = |r: &mut rand_chacha::ChaCha8Rng| (0..t).map(|_| Label::from_bool(r.random_bool(0.5))).collect();
            let pred = labels(&mut r);
            let scores = r.random_bool(0.5).then(|| (0..t).map(|_| r.random::<f64>()).collect());
            let truth = if r.random_bool(0.5) { Some(labels(&mut r)) } else { None };
            TracedSequence::new(
                common::random_matrix(&mut r, t, n, 1e6),
                common::random_matrix(&mut r, t + 1, m, 1.0),
                pred,
                scores,
                truth,
            )
            .unwrap()
        })
        .collect();
    let split = [SplitTag::Train, SplitTag::Val, SplitTag::Test][r.random_range(0..3)];
    TraceDataset::new(schema, seqs, split).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_formats_round_trip(seed in any::<u64>()) {
        let ds = arbitrary_dataset(seed);
        let p = Path::new("mem");
        let bin = encode_binary(&ds);
        let back = decode_binary(p, &bin).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(encode_binary(&back), bin);
        let jsonl = encode_jsonl(&ds);
        prop_assert_eq!(&decode_jsonl(p, &jsonl[..]).unwrap(), &ds);
    }

    #[test]
    fn batch_matches_sequential(seed in 0u64..10_000) {
        let (model, _) = common::random_model(seed);
        let mut r = common::rng(seed);
        let inputs = common::random_inputs(&mut r, &model, 25, 12);
        let refs: Vec<&Matrix> = inputs.iter().collect();
        for emit in [EmitOrder::PostTransition, EmitOrder::PreTransition] {
            let batch = classify_batch(&model, &refs, emit).unwrap();
            for (x, b) in inputs.iter().zip(&batch) {
                let s = classify_sequence(&model, x, emit).unwrap();
                prop_assert_eq!(&s.labels, &b.labels);
                prop_assert_eq!(s.concepts(), b.concepts.clone());
                prop_assert_eq!(s.labels.len(), x.rows() - model.window);
            }
        }
    }

    #[test]
    fn saved_models_classify_identically(seed in 0u64..10_000) {
        let (model, ds) = common::random_model(seed);
        let text = model_to_string(&model);
        let back = model_from_str(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(
            classify_dataset(&back, &ds, EmitOrder::PostTransition).unwrap(),
            classify_dataset(&model, &ds, EmitOrder::PostTransition).unwrap()
        );
        prop_assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn classifier_width_is_n_times_window(seed in 0u64..10_000, n in 1usize..4, w in 0usize..=3, mlp in any::<bool>()) {
        let ds = common::random_traces(seed, n, 6, 10);
        let mut cfg = PipelineConfig { k: KChoice::Fixed(3), window: w, seed, ..PipelineConfig::default() };
        if mlp {
            common::small_mlp(&mut cfg);
        }
        let model = extract_pipeline(&cfg, &ds).unwrap();
        for f in &model.transitions {
            prop_assert_eq!(f.input_width(), n * (w + 1));
        }
    }
}
