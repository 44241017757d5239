//! Per-concept transition datasets and the classifiers trained on them.
//!
//! For every sequence the hidden states `h_0..h_T` are mapped to concepts
//! `c_0..c_T`; each step contributes the triple `(c[t-1], x[t], c[t])`.
//! The dataset of concept `c` holds, for every triple leaving `c` with
//! `t > w`, the window `x[t-w] .. x[t]` (oldest first) and the target `c[t]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::concepts::{Clustering, ConceptId, ConceptSet};
use crate::data::TraceDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mlp::{FeedForwardNet, MlpParams};
use crate::rng;
use crate::tree::{DecisionTree, TreeParams};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TransitionTriple {
    pub sequence: usize,
    /// 1-based timestep of the consumed input.
    pub t: usize,
    pub from: ConceptId,
    pub to: ConceptId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionData {
    pub inputs: Matrix,
    pub targets: Vec<ConceptId>,
}

impl TransitionData {
    fn empty(width: usize) -> Self {
        Self {
            inputs: Matrix::with_cols(width),
            targets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.inputs.cols()
    }

    /// Sorted distinct targets with their counts.
    pub fn target_counts(&self) -> Vec<(ConceptId, usize)> {
        let mut sorted = self.targets.clone();
        sorted.sort_unstable();
        let mut out: Vec<(ConceptId, usize)> = Vec::new();
        for t in sorted {
            match out.last_mut() {
                Some((id, n)) if *id == t => *n += 1,
                _ => out.push((t, 1)),
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionTable {
    pub window: usize,
    pub input_width: usize,
    /// Indexed by source concept id.
    pub datasets: Vec<TransitionData>,
    /// All triples, including the first `w` steps of each sequence.
    pub triples: Vec<TransitionTriple>,
}

impl TransitionTable {
    /// `n * (w + 1)`.
    pub fn row_width(&self) -> usize {
        self.input_width * (self.window + 1)
    }

    pub fn dataset(&self, id: ConceptId) -> &TransitionData {
        &self.datasets[id.0]
    }

    /// Empirical transition frequencies `from -> to` over all triples.
    pub fn transition_counts(&self) -> Vec<Vec<usize>> {
        let k = self.datasets.len();
        let mut counts = vec![vec![0usize; k]; k];
        for tr in &self.triples {
            counts[tr.from.0][tr.to.0] += 1;
        }
        counts
    }
}

/// Concatenates inputs `x[t-w] ..= x[t]` (1-based `t`).
pub fn window_row(inputs: &Matrix, t: usize, window: usize, out: &mut Vec<f64>) {
    out.clear();
    for s in t - window..=t {
        out.extend_from_slice(inputs.row(s - 1));
    }
}

pub fn build_transition_table(
    ds: &TraceDataset,
    concepts: &ConceptSet,
    clustering: &Clustering,
    window: usize,
) -> Result<TransitionTable> {
    let min_len = ds.min_len();
    if window >= min_len {
        return Err(Error::WindowTooLarge {
            window,
            length: min_len,
        });
    }
    let n = ds.input_width();
    let width = n * (window + 1);
    let k = concepts.len();
    let mut datasets = vec![TransitionData::empty(width); k];
    let mut triples = Vec::with_capacity(ds.total_timesteps());
    let mut row = Vec::with_capacity(width);
    for (s, seq) in ds.sequences.iter().enumerate() {
        let path: Vec<ConceptId> = seq
            .hidden
            .iter_rows()
            .map(|h| crate::concepts::assign_concept(concepts, clustering, h))
            .collect();
        for t in 1..=seq.len() {
            let (from, to) = (path[t - 1], path[t]);
            triples.push(TransitionTriple {
                sequence: s,
                t,
                from,
                to,
            });
            if t > window {
                window_row(&seq.inputs, t, window, &mut row);
                let d = &mut datasets[from.0];
                d.inputs.push_row(&row)?;
                d.targets.push(to);
            }
        }
    }
    Ok(TransitionTable {
        window,
        input_width: n,
        datasets,
        triples,
    })
}

/// Downsamples every target class of every concept dataset to that
/// dataset's smallest class count. Kept rows retain their order.
pub fn balance_transition_data(table: &TransitionTable, seed: u64) -> TransitionTable {
    let datasets = table
        .datasets
        .iter()
        .enumerate()
        .map(|(c, d)| {
            let counts = d.target_counts();
            if counts.len() <= 1 {
                return d.clone();
            }
            let min = counts.iter().map(|&(_, n)| n).min().unwrap_or(0);
            let mut rng = rng::seeded(rng::derive_seed(seed, c as u64));
            let mut keep = Vec::with_capacity(min * counts.len());
            for (target, _) in counts {
                let mut rows: Vec<usize> = (0..d.len()).filter(|&i| d.targets[i] == target).collect();
                rows.shuffle(&mut rng);
                rows.truncate(min);
                keep.extend(rows);
            }
            keep.sort_unstable();
            TransitionData {
                inputs: d.inputs.select_rows(&keep),
                targets: keep.iter().map(|&i| d.targets[i]).collect(),
            }
        })
        .collect();
    TransitionTable {
        datasets,
        ..table.clone()
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    #[default]
    Dt,
    Mlp,
}

impl core::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dt" => Ok(Self::Dt),
            "mlp" => Ok(Self::Mlp),
            other => Err(Error::InvalidArgument(format!("unknown classifier kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ClassifierKind,
    pub tree: TreeParams,
    pub mlp: MlpParams,
    pub balance: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Dt,
            tree: TreeParams::default(),
            mlp: MlpParams::default(),
            balance: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tree.min_leaf == 0 {
            return Err(Error::InvalidArgument("dt_min_leaf must be positive".into()));
        }
        if self.kind == ClassifierKind::Mlp
            && (self.mlp.epochs == 0
                || self.mlp.batch_size == 0
                || !(self.mlp.learning_rate > 0.0)
                || self.mlp.hidden.contains(&0))
        {
            return Err(Error::InvalidArgument("mlp hyperparameters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TransitionClassifier {
    Dt(DecisionTree),
    Mlp(FeedForwardNet),
}

impl TransitionClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::Dt(_) => ClassifierKind::Dt,
            Self::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            Self::Dt(t) => t.input_width,
            Self::Mlp(n) => n.input_width,
        }
    }

    /// Concepts this classifier can emit.
    pub fn targets(&self) -> &[ConceptId] {
        match self {
            Self::Dt(t) => &t.targets,
            Self::Mlp(n) => &n.targets,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<ConceptId> {
        match self {
            Self::Dt(t) => t.predict(x),
            Self::Mlp(n) => n.predict(x),
        }
    }

    /// Row-wise prediction over a matrix of windows.
    pub fn predict_rows(&self, rows: &Matrix) -> Result<Vec<ConceptId>> {
        rows.iter_rows().map(|r| self.predict(r)).collect()
    }

    /// Self-loop used for concepts never left during training.
    pub fn identity(kind: ClassifierKind, concept: ConceptId, width: usize) -> Self {
        match kind {
            ClassifierKind::Dt => Self::Dt(DecisionTree::constant(concept, width)),
            ClassifierKind::Mlp => Self::Mlp(FeedForwardNet::constant(concept, width)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Dt(t) => t.validate(),
            Self::Mlp(n) => n.validate(),
        }
    }

    pub fn accuracy(&self, data: &TransitionData) -> Result<f64> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for (x, t) in data.inputs.iter_rows().zip(&data.targets) {
            if self.predict(x)? == *t {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    }
}

pub fn train_transition_dt(data: &TransitionData, params: TreeParams) -> Result<TransitionClassifier> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    DecisionTree::fit(&data.inputs, &data.targets, params).map(TransitionClassifier::Dt)
}

pub fn train_transition_mlp(data: &TransitionData, params: &MlpParams) -> Result<TransitionClassifier> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    FeedForwardNet::fit(&data.inputs, &data.targets, params).map(TransitionClassifier::Mlp)
}

/// One classifier per concept; concepts without outgoing data loop to themselves.
/// The table is balanced first when `cfg.balance` is set.
pub fn train_transitions(table: &TransitionTable, cfg: &TrainConfig, seed: u64) -> Result<Vec<TransitionClassifier>> {
    cfg.validate()?;
    let balanced;
    let table = if cfg.balance {
        balanced = balance_transition_data(table, seed);
        &balanced
    } else {
        table
    };
    let width = table.row_width();
    table
        .datasets
        .iter()
        .enumerate()
        .map(|(c, data)| {
            let f = if data.is_empty() {
                TransitionClassifier::identity(cfg.kind, ConceptId(c), width)
            } else {
                match cfg.kind {
                    ClassifierKind::Dt => train_transition_dt(data, cfg.tree)?,
                    ClassifierKind::Mlp => {
                        let params = MlpParams {
                            seed: rng::derive_seed(cfg.mlp.seed ^ seed, c as u64),
                            ..cfg.mlp.clone()
                        };
                        train_transition_mlp(data, &params)?
                    }
                }
            };
            debug_assert_eq!(f.input_width(), width);
            Ok(f)
        })
        .collect()
}

pub fn predict_transition(f: &TransitionClassifier, window: &[f64]) -> Result<ConceptId> {
    f.predict(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{name_concepts, ConceptSet};
    use crate::data::{FeatureSchema, Label, SplitTag, TracedSequence};

    /// Three 1-d clusters at 0, 10, 20; hidden state `h_t` picks the cluster.
    fn fixture(paths: &[&[usize]]) -> (TraceDataset, ConceptSet, Clustering) {
        let clustering = Clustering {
            centroids: Matrix::from_rows(&[[0.0], [10.0], [20.0]]).unwrap(),
            inertia: 0.0,
            seed: 0,
        };
        let schema = FeatureSchema::continuous(&["u", "v"], "neg", "pos").unwrap();
        let seqs = paths
            .iter()
            .map(|path| {
                let t = path.len() - 1;
                let inputs =
                    Matrix::from_rows(&(1..=t).map(|i| [i as f64, -(i as f64)]).collect::<Vec<_>>()).unwrap();
                let hidden = Matrix::from_rows(&path.iter().map(|&c| [10.0 * c as f64]).collect::<Vec<_>>()).unwrap();
                TracedSequence::new(inputs, hidden, vec![Label::NEGATIVE; t], None, None).unwrap()
            })
            .collect();
        let ds = TraceDataset::new(schema.clone(), seqs, SplitTag::Train).unwrap();
        let cs = name_concepts(&[0, 1, 2], 3, &[Label::NEGATIVE; 3], 0.8, &schema.class_names).unwrap();
        (ds, cs, clustering)
    }

    #[test]
    fn triples_follow_concept_path() {
        let (ds, cs, cl) = fixture(&[&[0, 1, 1, 2]]);
        let table = build_transition_table(&ds, &cs, &cl, 0).unwrap();
        let got: Vec<(usize, usize, usize)> = table.triples.iter().map(|t| (t.from.0, t.t, t.to.0)).collect();
        assert_eq!(got, vec![(0, 1, 1), (1, 2, 1), (1, 3, 2)]);
        assert_eq!(table.dataset(ConceptId(0)).inputs.to_rows(), vec![vec![1.0, -1.0]]);
        assert_eq!(table.dataset(ConceptId(1)).targets, vec![ConceptId(1), ConceptId(2)]);
        assert!(table.dataset(ConceptId(2)).is_empty());
    }

    #[test]
    fn window_drops_early_steps() {
        let (ds, cs, cl) = fixture(&[&[0, 1, 1, 2]]);
        let table = build_transition_table(&ds, &cs, &cl, 1).unwrap();
        assert_eq!(table.row_width(), 4);
        let rows: usize = table.datasets.iter().map(TransitionData::len).sum();
        assert_eq!(rows, 2);
        assert_eq!(table.dataset(ConceptId(1)).inputs.row(0), &[1.0, -1.0, 2.0, -2.0]);
        assert_eq!(table.triples.len(), 3);
        assert_eq!(
            build_transition_table(&ds, &cs, &cl, 3).unwrap_err(),
            Error::WindowTooLarge { window: 3, length: 3 }
        );
    }

    #[test]
    fn constant_path_has_single_target() {
        let (ds, cs, cl) = fixture(&[&[2, 2, 2, 2, 2]]);
        let table = build_transition_table(&ds, &cs, &cl, 0).unwrap();
        assert_eq!(table.dataset(ConceptId(2)).target_counts(), vec![(ConceptId(2), 4)]);
    }

    #[test]
    fn balancing_equalizes_targets() {
        let mut path = vec![0usize];
        for i in 0..14 {
            path.push(if i < 10 { 0 } else { 1 });
            if i >= 10 {
                path.push(0);
            }
        }
        let (ds, cs, cl) = fixture(&[&path]);
        let table = build_transition_table(&ds, &cs, &cl, 0).unwrap();
        let counts = table.dataset(ConceptId(0)).target_counts();
        assert_eq!(counts, vec![(ConceptId(0), 10), (ConceptId(1), 4)]);
        let balanced = balance_transition_data(&table, 3);
        assert_eq!(
            balanced.dataset(ConceptId(0)).target_counts(),
            vec![(ConceptId(0), 4), (ConceptId(1), 4)]
        );
        // single-target dataset passes through
        assert_eq!(balanced.dataset(ConceptId(1)), table.dataset(ConceptId(1)));
        assert_eq!(balanced, balance_transition_data(&table, 3));
    }

    #[test]
    fn empty_dataset_gets_identity() {
        let (ds, cs, cl) = fixture(&[&[0, 1, 1, 2]]);
        let table = build_transition_table(&ds, &cs, &cl, 0).unwrap();
        for kind in [ClassifierKind::Dt, ClassifierKind::Mlp] {
            let cfg = TrainConfig {
                kind,
                ..TrainConfig::default()
            };
            let fs = train_transitions(&table, &cfg, 0).unwrap();
            assert_eq!(fs[2].predict(&[5.0, 5.0]).unwrap(), ConceptId(2));
            assert!(fs.iter().all(|f| f.input_width() == 2));
        }
        assert_eq!(
            train_transition_dt(table.dataset(ConceptId(2)), TreeParams::default()),
            Err(Error::EmptyDataset)
        );
    }

    #[test]
    fn depth_one_split_predicts_by_threshold() {
        let data = TransitionData {
            inputs: Matrix::from_rows(&[[3.0, 0.0], [4.0, 1.0], [6.0, 0.0], [7.0, 1.0]]).unwrap(),
            targets: vec![ConceptId(0), ConceptId(0), ConceptId(1), ConceptId(1)],
        };
        let f = train_transition_dt(&data, TreeParams { max_depth: 1, min_leaf: 1 }).unwrap();
        assert_eq!(predict_transition(&f, &[3.0, 9.0]).unwrap(), ConceptId(0));
        assert_eq!(predict_transition(&f, &[5.5, 9.0]).unwrap(), ConceptId(1));
        assert!(predict_transition(&f, &[3.0]).is_err());
    }
}
