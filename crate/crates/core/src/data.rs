//! Trace data model and dataset manipulations.
//!
//! A [`TracedSequence`] stores `T` inputs `x_1..x_T` and `T + 1` hidden
//! states `h_0..h_T`, so row `i` of `inputs` is `x_{i+1}` and row `i` of
//! `hidden` is `h_i`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Binary class label.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Label(u8);

impl Label {
    pub const NEGATIVE: Label = Label(0);
    pub const POSITIVE: Label = Label(1);
    pub const ALL: [Label; 2] = [Label::NEGATIVE, Label::POSITIVE];

    pub fn new(value: u8) -> Result<Self> {
        match value {
            0 | 1 => Ok(Label(value)),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::POSITIVE
        } else {
            Label::NEGATIVE
        }
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for Label {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Label::new(value)
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    /// Integer codes stored in the real-valued input matrix.
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    pub class_names: BTreeMap<Label, String>,
}

impl FeatureSchema {
    /// All-continuous schema with the given feature and class names.
    pub fn continuous<S: AsRef<str>>(names: &[S], negative: &str, positive: &str) -> Result<Self> {
        let schema = Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            kinds: alloc::vec![FeatureKind::Continuous; names.len()],
            class_names: [
                (Label::NEGATIVE, negative.to_string()),
                (Label::POSITIVE, positive.to_string()),
            ]
            .into_iter()
            .collect(),
        };
        schema.validate()?;
        Ok(schema)
    }

    /// The UCI Occupancy feature layout (`empty` / `occupied`).
    pub fn occupancy() -> Self {
        Self::continuous(
            &["Temperature", "Humidity", "Light", "CO2", "HumidityRatio"],
            "empty",
            "occupied",
        )
        .expect("static schema is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.is_empty() {
            return Err(Error::InvalidArgument("schema has no features".into()));
        }
        if self.kinds.len() != self.names.len() {
            return Err(Error::Dimension(format!(
                "{} feature names but {} kinds",
                self.names.len(),
                self.kinds.len()
            )));
        }
        for (i, name) in self.names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidArgument(format!("feature {i} has an empty name")));
            }
            if self.names[..i].contains(name) {
                return Err(Error::InvalidArgument(format!("duplicate feature name `{name}`")));
            }
        }
        if self.class_names.len() != Label::ALL.len()
            || Label::ALL.iter().any(|l| !self.class_names.contains_key(l))
        {
            return Err(Error::InvalidArgument(
                "class_names must name exactly the labels 0 and 1".into(),
            ));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn class_name(&self, label: Label) -> &str {
        self.class_names.get(&label).map_or("?", String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Names for a window of `window + 1` concatenated inputs, oldest first:
    /// `Light[t-2], .., Light[t]`.
    pub fn windowed_names(&self, window: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(self.width() * (window + 1));
        for lag in (0..=window).rev() {
            for name in &self.names {
                if lag == 0 {
                    out.push(format!("{name}[t]"));
                } else {
                    out.push(format!("{name}[t-{lag}]"));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracedSequence {
    pub inputs: Matrix,
    pub hidden: Matrix,
    pub pred_labels: Vec<Label>,
    pub scores: Option<Vec<f64>>,
    pub true_labels: Option<Vec<Label>>,
}

impl TracedSequence {
    pub fn new(
        inputs: Matrix,
        hidden: Matrix,
        pred_labels: Vec<Label>,
        scores: Option<Vec<f64>>,
        true_labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        let seq = Self {
            inputs,
            hidden,
            pred_labels,
            scores,
            true_labels,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.inputs.rows();
        if t == 0 {
            return Err(Error::Dimension("sequence has no timesteps".into()));
        }
        if self.hidden.rows() != t + 1 {
            return Err(Error::Dimension(format!(
                "hidden has {} rows, expected T+1 = {} (h_0..h_T)",
                self.hidden.rows(),
                t + 1
            )));
        }
        if self.pred_labels.len() != t {
            return Err(Error::Dimension(format!(
                "{} predicted labels for {t} timesteps",
                self.pred_labels.len()
            )));
        }
        if let Some(scores) = &self.scores {
            if scores.len() != t {
                return Err(Error::Dimension(format!("{} scores for {t} timesteps", scores.len())));
            }
            if scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(Error::InvalidArgument("score outside [0, 1]".into()));
            }
        }
        if let Some(labels) = &self.true_labels {
            if labels.len() != t {
                return Err(Error::Dimension(format!("{} true labels for {t} timesteps", labels.len())));
            }
        }
        if !self.inputs.is_finite() {
            return Err(Error::NonFinite("inputs"));
        }
        if !self.hidden.is_finite() {
            return Err(Error::NonFinite("hidden states"));
        }
        Ok(())
    }

    /// Number of timesteps `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn final_label(&self, source: LabelSource) -> Option<Label> {
        self.labels(source).and_then(|l| l.last().copied())
    }

    pub fn labels(&self, source: LabelSource) -> Option<&[Label]> {
        match source {
            LabelSource::Predicted => Some(&self.pred_labels),
            LabelSource::Truth => self.true_labels.as_deref(),
        }
    }

    /// Copies timesteps `start+1..=end` (0-based input rows `start..end`)
    /// together with the hidden state preceding them.
    fn window(&self, start: usize, end: usize) -> Self {
        Self {
            inputs: self.inputs.slice_rows(start, end),
            hidden: self.hidden.slice_rows(start, end + 1),
            pred_labels: self.pred_labels[start..end].to_vec(),
            scores: self.scores.as_ref().map(|s| s[start..end].to_vec()),
            true_labels: self.true_labels.as_ref().map(|l| l[start..end].to_vec()),
        }
    }
}

/// Which label stream an operation reads.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    /// The source model's predictions (the stream the extracted model mimics).
    #[default]
    Predicted,
    Truth,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    #[default]
    Train,
    Val,
    Test,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceDataset {
    pub schema: FeatureSchema,
    pub sequences: Vec<TracedSequence>,
    pub split: SplitTag,
}

impl TraceDataset {
    pub fn new(schema: FeatureSchema, sequences: Vec<TracedSequence>, split: SplitTag) -> Result<Self> {
        let ds = Self {
            schema,
            sequences,
            split,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let first = self.sequences.first().ok_or(Error::EmptyDataset)?;
        let n = self.schema.width();
        let m = first.hidden.cols();
        if m == 0 {
            return Err(Error::Dimension("hidden width is zero".into()));
        }
        for (i, seq) in self.sequences.iter().enumerate() {
            seq.validate()
                .map_err(|e| Error::Dimension(format!("sequence {i}: {e}")))?;
            if seq.inputs.cols() != n {
                return Err(Error::Dimension(format!(
                    "sequence {i} has input width {}, schema has {n} features",
                    seq.inputs.cols()
                )));
            }
            if seq.hidden.cols() != m {
                return Err(Error::Dimension(format!(
                    "sequence {i} has hidden width {}, expected {m}",
                    seq.hidden.cols()
                )));
            }
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.schema.width()
    }

    pub fn hidden_width(&self) -> usize {
        self.sequences.first().map_or(0, |s| s.hidden.cols())
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn min_len(&self) -> usize {
        self.sequences.iter().map(TracedSequence::len).min().unwrap_or(0)
    }

    pub fn total_timesteps(&self) -> usize {
        self.sequences.iter().map(TracedSequence::len).sum()
    }

    fn with_sequences(&self, sequences: Vec<TracedSequence>) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            schema: self.schema.clone(),
            sequences,
            split: self.split,
        })
    }
}

/// Cuts every sequence into consecutive non-overlapping chunks of exactly
/// `length` steps. Remainders shorter than `length` are dropped.
pub fn subsequence_split(ds: &TraceDataset, length: usize) -> Result<TraceDataset> {
    if length == 0 {
        return Err(Error::InvalidArgument("subsequence length must be positive".into()));
    }
    let chunks = ds
        .sequences
        .iter()
        .flat_map(|seq| (0..seq.len() / length).map(move |j| seq.window(j * length, (j + 1) * length)))
        .collect();
    ds.with_sequences(chunks)
}

pub fn drop_feature(ds: &TraceDataset, name: &str) -> Result<TraceDataset> {
    let j = ds
        .schema
        .index_of(name)
        .ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
    if ds.schema.width() == 1 {
        return Err(Error::InvalidArgument(format!(
            "dropping `{name}` would leave no features"
        )));
    }
    let mut schema = ds.schema.clone();
    schema.names.remove(j);
    schema.kinds.remove(j);
    let sequences = ds
        .sequences
        .iter()
        .map(|seq| TracedSequence {
            inputs: seq.inputs.remove_column(j),
            ..seq.clone()
        })
        .collect();
    Ok(TraceDataset {
        schema,
        sequences,
        split: ds.split,
    })
}

/// Keeps sequences whose final-timestep score is `<= low` or `>= high`.
pub fn filter_high_confidence(ds: &TraceDataset, low: f64, high: f64) -> Result<TraceDataset> {
    if !(0.0 <= low && low < high && high <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence band needs 0 <= low < high <= 1, got [{low}, {high}]"
        )));
    }
    let mut kept = Vec::new();
    for seq in &ds.sequences {
        let score = *seq
            .scores
            .as_ref()
            .and_then(|s| s.last())
            .ok_or(Error::MissingScores)?;
        if score <= low || score >= high {
            kept.push(seq.clone());
        }
    }
    ds.with_sequences(kept)
}

/// Downsamples the majority class (by final-timestep label) so both classes
/// have the same number of sequences. Kept sequences retain their order.
pub fn balance_by_class(ds: &TraceDataset, seed: u64, source: LabelSource) -> Result<TraceDataset> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, seq) in ds.sequences.iter().enumerate() {
        let label = seq.final_label(source).ok_or(Error::MissingLabels("true"))?;
        by_class[label.index()].push(i);
    }
    let target = by_class[0].len().min(by_class[1].len());
    if target == 0 {
        return Err(Error::SingleClass);
    }
    let mut rng = rng::seeded(seed);
    let mut keep = Vec::with_capacity(2 * target);
    for indices in &mut by_class {
        if indices.len() > target {
            indices.shuffle(&mut rng);
            indices.truncate(target);
        }
        keep.extend_from_slice(indices);
    }
    keep.sort_unstable();
    ds.with_sequences(keep.into_iter().map(|i| ds.sequences[i].clone()).collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::vec;

    /// Sequence with inputs `x_t = [t, 10 t]`, hidden `h_t = [t]` and the
    /// given labels / final score.
    pub(crate) fn ramp_sequence(t: usize, label: Label, score: Option<f64>) -> TracedSequence {
        let inputs = Matrix::from_rows(
            &(1..=t).map(|i| vec![i as f64, 10.0 * i as f64]).collect::<Vec<_>>(),
        )
        .unwrap();
        let hidden = Matrix::from_rows(&(0..=t).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let scores = score.map(|s| vec![s; t]);
        TracedSequence::new(inputs, hidden, vec![label; t], scores, None).unwrap()
    }

    pub(crate) fn two_feature_schema() -> FeatureSchema {
        FeatureSchema::continuous(&["a", "b"], "neg", "pos").unwrap()
    }

    fn dataset(seqs: Vec<TracedSequence>) -> TraceDataset {
        TraceDataset::new(two_feature_schema(), seqs, SplitTag::Train).unwrap()
    }

    #[test]
    fn hidden_missing_h0_is_rejected() {
        let inputs = Matrix::zeros(2, 4);
        let hidden = Matrix::zeros(2, 3);
        let err = TracedSequence::new(inputs, hidden, vec![Label::NEGATIVE; 2], None, None).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn label_rejects_non_binary() {
        assert_eq!(Label::new(2), Err(Error::InvalidLabel(2)));
    }

    #[test]
    fn split_130_into_60() {
        let ds = dataset(vec![ramp_sequence(130, Label::POSITIVE, None)]);
        let out = subsequence_split(&ds, 60).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.sequences.iter().all(|s| s.len() == 60));
        // second chunk starts at x_61 and carries h_60 as its initial state
        assert_eq!(out.sequences[1].inputs.row(0), &[61.0, 610.0]);
        assert_eq!(out.sequences[1].hidden.row(0), &[60.0]);
        assert_eq!(out.sequences[1].hidden.row(60), &[120.0]);
    }

    #[test]
    fn split_exact_and_too_short() {
        let ds = dataset(vec![ramp_sequence(60, Label::POSITIVE, None)]);
        let out = subsequence_split(&ds, 60).unwrap();
        assert_eq!(out, ds);
        let ds = dataset(vec![ramp_sequence(59, Label::POSITIVE, None)]);
        assert_eq!(subsequence_split(&ds, 60), Err(Error::EmptyDataset));
        assert!(subsequence_split(&ds, 0).is_err());
    }

    #[test]
    fn drop_humidity_ratio_from_occupancy() {
        let schema = FeatureSchema::occupancy();
        let inputs = Matrix::from_rows(&[[20.0, 30.0, 400.0, 700.0, 0.004]]).unwrap();
        let hidden = Matrix::zeros(2, 2);
        let seq = TracedSequence::new(inputs, hidden, vec![Label::POSITIVE], None, None).unwrap();
        let ds = TraceDataset::new(schema, vec![seq], SplitTag::Train).unwrap();
        let out = drop_feature(&ds, "HumidityRatio").unwrap();
        assert_eq!(out.input_width(), 4);
        assert_eq!(out.sequences[0].inputs.row(0), &[20.0, 30.0, 400.0, 700.0]);
        assert_eq!(
            drop_feature(&out, "HumidityRatio"),
            Err(Error::UnknownFeature("HumidityRatio".into()))
        );
    }

    #[test]
    fn drop_last_feature_is_rejected() {
        let schema = FeatureSchema::continuous(&["only"], "n", "p").unwrap();
        let seq = TracedSequence::new(Matrix::zeros(1, 1), Matrix::zeros(2, 1), vec![Label::NEGATIVE], None, None)
            .unwrap();
        let ds = TraceDataset::new(schema, vec![seq], SplitTag::Train).unwrap();
        assert!(matches!(drop_feature(&ds, "only"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn high_confidence_filter() {
        let ds = dataset(vec![
            ramp_sequence(3, Label::NEGATIVE, Some(0.05)),
            ramp_sequence(3, Label::NEGATIVE, Some(0.5)),
            ramp_sequence(3, Label::POSITIVE, Some(0.93)),
        ]);
        let out = filter_high_confidence(&ds, 0.2, 0.8).unwrap();
        assert_eq!(out.sequences, vec![ds.sequences[0].clone(), ds.sequences[2].clone()]);

        let ds = dataset(vec![
            ramp_sequence(2, Label::NEGATIVE, Some(0.0)),
            ramp_sequence(2, Label::NEGATIVE, Some(0.01)),
            ramp_sequence(2, Label::POSITIVE, Some(1.0)),
        ]);
        let out = filter_high_confidence(&ds, 0.0, 1.0).unwrap();
        assert_eq!(out.len(), 2);
        assert!(filter_high_confidence(&ds, 0.5, 0.5).is_err());

        let no_scores = dataset(vec![ramp_sequence(2, Label::NEGATIVE, None)]);
        assert_eq!(filter_high_confidence(&no_scores, 0.2, 0.8), Err(Error::MissingScores));
    }

    #[test]
    fn balance_downsamples_majority() {
        let mut seqs = Vec::new();
        for i in 0..10 {
            seqs.push(ramp_sequence(2 + i, Label::POSITIVE, None));
        }
        for i in 0..4 {
            seqs.push(ramp_sequence(2 + i, Label::NEGATIVE, None));
        }
        let ds = dataset(seqs);
        let out = balance_by_class(&ds, 7, LabelSource::Predicted).unwrap();
        let pos = out.sequences.iter().filter(|s| s.pred_labels[0] == Label::POSITIVE).count();
        assert_eq!((pos, out.len() - pos), (4, 4));
        assert_eq!(out, balance_by_class(&ds, 7, LabelSource::Predicted).unwrap());
        assert!(matches!(
            balance_by_class(&ds, 7, LabelSource::Truth),
            Err(Error::MissingLabels(_))
        ));
    }

    #[test]
    fn balance_single_class_fails() {
        let ds = dataset(vec![ramp_sequence(2, Label::POSITIVE, None)]);
        assert_eq!(balance_by_class(&ds, 0, LabelSource::Predicted), Err(Error::SingleClass));
    }

    #[test]
    fn windowed_names_oldest_first() {
        let names = two_feature_schema().windowed_names(1);
        assert_eq!(names, vec!["a[t-1]", "b[t-1]", "a[t]", "b[t]"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_dataset() -> impl Strategy<Value = TraceDataset> {
            prop::collection::vec((1usize..40, any::<bool>(), 0.0f64..=1.0), 1..12).prop_map(|specs| {
                let seqs = specs
                    .into_iter()
                    .map(|(t, pos, s)| ramp_sequence(t, Label::from_bool(pos), Some(s)))
                    .collect();
                dataset(seqs)
            })
        }

        proptest! {
            #[test]
            fn split_preserves_retained_steps(ds in arb_dataset(), len in 1usize..15) {
                let expected: usize = ds.sequences.iter().map(|s| s.len() / len * len).sum();
                match subsequence_split(&ds, len) {
                    Ok(out) => {
                        prop_assert_eq!(out.total_timesteps(), expected);
                        prop_assert!(out.sequences.iter().all(|s| s.len() == len));
                    }
                    Err(e) => {
                        prop_assert_eq!(e, Error::EmptyDataset);
                        prop_assert_eq!(expected, 0);
                    }
                }
            }

            #[test]
            fn balance_is_equal_submultiset(ds in arb_dataset(), seed in any::<u64>()) {
                if let Ok(out) = balance_by_class(&ds, seed, LabelSource::Predicted) {
                    let pos = out.sequences.iter().filter(|s| s.pred_labels[0] == Label::POSITIVE).count();
                    prop_assert_eq!(pos * 2, out.len());
                    let mut available = ds.sequences.clone();
                    for s in &out.sequences {
                        let i = available.iter().position(|a| a == s);
                        prop_assert!(i.is_some());
                        available.remove(i.unwrap());
                    }
                    prop_assert_eq!(out, balance_by_class(&ds, seed, LabelSource::Predicted).unwrap());
                }
            }

            #[test]
            fn filtered_scores_lie_in_band(ds in arb_dataset(), low in 0.0f64..0.5, high in 0.5f64..=1.0) {
                prop_assume!(low < high);
                if let Ok(out) = filter_high_confidence(&ds, low, high) {
                    for s in &out.sequences {
                        let last = *s.scores.as_ref().unwrap().last().unwrap();
                        prop_assert!(last <= low || last >= high);
                    }
                }
            }
        }
    }
}
