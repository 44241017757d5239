//! The extracted model `(concepts, transition functions, concept -> label map,
//! start concept)` and sequence classification.
//!
//! Starting from the start concept, each step `t = w+1 ..= T` feeds the
//! window ending at `x[t]` to the current concept's classifier, moves to the
//! predicted concept and emits that concept's label. A sequence of length
//! `T` therefore yields `T - w` labels; the last one is the whole-sequence
//! prediction.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::concepts::{assign_concept, Clustering, ConceptId, ConceptSet};
use crate::data::{FeatureSchema, Label, TraceDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::transitions::{window_row, ClassifierKind, TransitionClassifier};

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractedModel {
    pub schema: FeatureSchema,
    pub concepts: ConceptSet,
    pub clustering: Clustering,
    /// Indexed by source concept id.
    pub transitions: Vec<TransitionClassifier>,
    /// Indexed by concept id: the concept's majority label.
    pub output_map: Vec<Label>,
    pub start_concept: ConceptId,
    pub window: usize,
}

/// When a step's label is emitted relative to its transition.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitOrder {
    /// Label of the concept reached after consuming `x[t]`.
    #[default]
    PostTransition,
    /// Label of the concept held before consuming `x[t]`.
    PreTransition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    /// 1-based timestep of the last consumed input.
    pub t: usize,
    pub previous: ConceptId,
    pub window: Vec<f64>,
    pub next: ConceptId,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub labels: Vec<Label>,
    pub steps: Vec<StepRecord>,
}

impl Classification {
    pub fn final_label(&self) -> Option<Label> {
        self.labels.last().copied()
    }

    /// Concept reached at every step.
    pub fn concepts(&self) -> Vec<ConceptId> {
        self.steps.iter().map(|s| s.next).collect()
    }
}

/// Batched output: labels and reached concepts per step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub labels: Vec<Label>,
    pub concepts: Vec<ConceptId>,
}

impl ExtractedModel {
    /// Assembles a model; the output map is taken from the concepts' majority labels.
    pub fn new(
        schema: FeatureSchema,
        concepts: ConceptSet,
        clustering: Clustering,
        transitions: Vec<TransitionClassifier>,
        start_concept: ConceptId,
        window: usize,
    ) -> Result<Self> {
        let output_map = concepts.concepts.iter().map(|c| c.majority_label).collect();
        let model = Self {
            schema,
            concepts,
            clustering,
            transitions,
            output_map,
            start_concept,
            window,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.concepts.len()
    }

    pub fn input_width(&self) -> usize {
        self.schema.width()
    }

    pub fn row_width(&self) -> usize {
        self.input_width() * (self.window + 1)
    }

    pub fn kind(&self) -> Option<ClassifierKind> {
        self.transitions.first().map(TransitionClassifier::kind)
    }

    pub fn label_of(&self, c: ConceptId) -> Label {
        self.output_map[c.0]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidModel(msg));
        self.schema.validate()?;
        let k = self.concepts.len();
        if k == 0 {
            return bad("model has no concepts".into());
        }
        for (i, c) in self.concepts.concepts.iter().enumerate() {
            if c.id != ConceptId(i) {
                return bad(format!("concept ids must be dense, found {} at {i}", c.id));
            }
        }
        if self.clustering.k() != k {
            return bad(format!("{} centroids for {k} concepts", self.clustering.k()));
        }
        if self.transitions.len() != k {
            return bad(format!("{} transition functions for {k} concepts", self.transitions.len()));
        }
        if self.output_map.len() != k {
            return bad(format!("output map covers {} of {k} concepts", self.output_map.len()));
        }
        if self.start_concept.0 >= k {
            return bad(format!("start concept {} out of range", self.start_concept));
        }
        for (c, label) in self.output_map.iter().enumerate() {
            if *label != self.concepts.concepts[c].majority_label {
                return bad(format!("output map for concept {c} differs from its majority label"));
            }
        }
        let width = self.row_width();
        for (c, f) in self.transitions.iter().enumerate() {
            f.validate()?;
            if f.input_width() != width {
                return bad(format!(
                    "transition function {c} takes width {}, window {} needs {width}",
                    f.input_width(),
                    self.window
                ));
            }
            if let Some(t) = f.targets().iter().find(|t| t.0 >= k) {
                return bad(format!("transition function {c} targets unknown concept {t}"));
            }
        }
        Ok(())
    }

    fn check_sequence(&self, inputs: &Matrix) -> Result<()> {
        if inputs.cols() != self.input_width() {
            return Err(Error::WidthMismatch {
                expected: self.input_width(),
                actual: inputs.cols(),
            });
        }
        if inputs.rows() <= self.window {
            return Err(Error::SequenceTooShort {
                length: inputs.rows(),
                window: self.window,
            });
        }
        Ok(())
    }
}

/// Modal concept of the sequences' initial hidden states, ties to the lowest id.
pub fn derive_start_concept(ds: &TraceDataset, concepts: &ConceptSet, clustering: &Clustering) -> Result<ConceptId> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts: BTreeMap<ConceptId, usize> = BTreeMap::new();
    for seq in &ds.sequences {
        *counts.entry(assign_concept(concepts, clustering, seq.hidden.row(0))).or_default() += 1;
    }
    let mut best = (ConceptId(0), 0usize);
    for (id, n) in counts {
        if n > best.1 {
            best = (id, n);
        }
    }
    Ok(best.0)
}

pub fn classify_sequence(model: &ExtractedModel, inputs: &Matrix, emit: EmitOrder) -> Result<Classification> {
    model.check_sequence(inputs)?;
    let w = model.window;
    let steps_len = inputs.rows() - w;
    let mut labels = Vec::with_capacity(steps_len);
    let mut steps = Vec::with_capacity(steps_len);
    let mut current = model.start_concept;
    let mut window = Vec::with_capacity(model.row_width());
    for t in w + 1..=inputs.rows() {
        window_row(inputs, t, w, &mut window);
        let next = model.transitions[current.0].predict(&window)?;
        let label = match emit {
            EmitOrder::PostTransition => model.label_of(next),
            EmitOrder::PreTransition => model.label_of(current),
        };
        labels.push(label);
        steps.push(StepRecord {
            t,
            previous: current,
            window: window.clone(),
            next,
            label,
        });
        current = next;
    }
    Ok(Classification { labels, steps })
}

/// Classifies many sequences at once: at every timestep the active
/// sequences are grouped by current concept and each group goes through its
/// classifier in one call. Output equals [`classify_sequence`] per sequence.
pub fn classify_batch(model: &ExtractedModel, sequences: &[&Matrix], emit: EmitOrder) -> Result<Vec<Trajectory>> {
    for s in sequences {
        model.check_sequence(s)?;
    }
    let w = model.window;
    let k = model.k();
    let mut current = vec![model.start_concept; sequences.len()];
    let mut out: Vec<Trajectory> = sequences
        .iter()
        .map(|s| Trajectory {
            labels: Vec::with_capacity(s.rows() - w),
            concepts: Vec::with_capacity(s.rows() - w),
        })
        .collect();
    let max_len = sequences.iter().map(|s| s.rows()).max().unwrap_or(0);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut row = Vec::with_capacity(model.row_width());
    for t in w + 1..=max_len {
        groups.iter_mut().for_each(Vec::clear);
        for (i, s) in sequences.iter().enumerate() {
            if s.rows() >= t {
                groups[current[i].0].push(i);
            }
        }
        for (c, members) in groups.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let mut batch = Matrix::with_cols(model.row_width());
            for &i in members {
                window_row(sequences[i], t, w, &mut row);
                batch.push_row(&row)?;
            }
            let next = model.transitions[c].predict_rows(&batch)?;
            for (&i, n) in members.iter().zip(next) {
                let label = match emit {
                    EmitOrder::PostTransition => model.label_of(n),
                    EmitOrder::PreTransition => model.label_of(current[i]),
                };
                out[i].labels.push(label);
                out[i].concepts.push(n);
                current[i] = n;
            }
        }
    }
    Ok(out)
}

/// [`classify_batch`] over every sequence of a dataset.
pub fn classify_dataset(model: &ExtractedModel, ds: &TraceDataset, emit: EmitOrder) -> Result<Vec<Trajectory>> {
    let inputs: Vec<&Matrix> = ds.sequences.iter().map(|s| &s.inputs).collect();
    classify_batch(model, &inputs, emit)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::concepts::{name_concepts, Concept};
    use crate::tree::{DecisionTree, TreeNode};
    use alloc::string::ToString;

    /// Concepts `[unc, healthy, sick]`; labels `[1, 0, 1]`.
    pub(crate) fn toy_concepts() -> (FeatureSchema, ConceptSet, Clustering) {
        let schema = FeatureSchema::continuous(&["x"], "healthy", "sick").unwrap();
        let labels = [1u8, 1, 1, 0, 1, 0, 0, 0, 0, 1, 1, 1, 1];
        let labels: Vec<Label> = labels.iter().map(|&l| Label::new(l).unwrap()).collect();
        let assign = [0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2];
        let cs = name_concepts(&assign, 3, &labels, 0.8, &schema.class_names).unwrap();
        let cl = Clustering {
            centroids: Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap(),
            inertia: 0.0,
            seed: 0,
        };
        (schema, cs, cl)
    }

    fn stump(width: usize, feature: usize, threshold: f64, lo: usize, hi: usize) -> TransitionClassifier {
        let mut targets = vec![ConceptId(lo), ConceptId(hi)];
        targets.sort_unstable();
        targets.dedup();
        let counts = vec![1; targets.len()];
        TransitionClassifier::Dt(DecisionTree {
            input_width: width,
            targets,
            max_depth: 1,
            nodes: vec![
                TreeNode::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf {
                    prediction: ConceptId(lo),
                    counts: counts.clone(),
                },
                TreeNode::Leaf {
                    prediction: ConceptId(hi),
                    counts,
                },
            ],
        })
    }

    #[test]
    fn toy_concept_names() {
        let (_, cs, _) = toy_concepts();
        let names: Vec<&str> = cs.concepts.iter().map(|c: &Concept| c.name.as_str()).collect();
        assert_eq!(names, vec!["uncertain", "healthy", "sick"]);
    }

    #[test]
    fn always_healthy_model_emits_zeros() {
        let (schema, cs, cl) = toy_concepts();
        let f = (0..3).map(|_| stump(1, 0, 0.0, 1, 1)).collect();
        let model = ExtractedModel::new(schema, cs, cl, f, ConceptId(0), 0).unwrap();
        let x = Matrix::from_rows(&[[3.0], [-1.0], [0.5]]).unwrap();
        let out = classify_sequence(&model, &x, EmitOrder::PostTransition).unwrap();
        assert_eq!(out.labels, vec![Label::NEGATIVE; 3]);
    }

    #[test]
    fn uncertain_to_healthy_emits_zero() {
        let (schema, cs, cl) = toy_concepts();
        let f = vec![stump(1, 0, 0.5, 1, 2), stump(1, 0, 0.5, 1, 2), stump(1, 0, 0.5, 1, 2)];
        let model = ExtractedModel::new(schema, cs.clone(), cl, f, ConceptId(0), 0).unwrap();
        let x = Matrix::from_rows(&[[0.1]]).unwrap();
        let out = classify_sequence(&model, &x, EmitOrder::PostTransition).unwrap();
        let step = &out.steps[0];
        assert_eq!(cs.name(step.previous), "uncertain");
        assert_eq!(cs.name(step.next), "healthy");
        assert_eq!(out.labels, vec![Label::NEGATIVE]);
        // the literal pre-transition order reports the uncertain concept's label instead
        let pre = classify_sequence(&model, &x, EmitOrder::PreTransition).unwrap();
        assert_eq!(pre.labels, vec![Label::POSITIVE]);
    }

    #[test]
    fn window_and_length_checks() {
        let (schema, cs, cl) = toy_concepts();
        let f = (0..3).map(|c| stump(2, 1, 0.0, c, c)).collect();
        let model = ExtractedModel::new(schema, cs, cl, f, ConceptId(0), 1).unwrap();
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]).unwrap();
        let out = classify_sequence(&model, &x, EmitOrder::PostTransition).unwrap();
        assert_eq!(out.labels.len(), 3);
        assert_eq!(out.steps[0].window, vec![1.0, 2.0]);
        assert_eq!(out.steps[0].t, 2);
        let short = Matrix::from_rows(&[[1.0]]).unwrap();
        assert_eq!(
            classify_sequence(&model, &short, EmitOrder::PostTransition).unwrap_err(),
            Error::SequenceTooShort { length: 1, window: 1 }
        );
        let wide = Matrix::zeros(3, 2);
        assert!(matches!(
            classify_sequence(&model, &wide, EmitOrder::PostTransition),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn invalid_models_are_rejected() {
        let (schema, cs, cl) = toy_concepts();
        let f: Vec<_> = (0..2).map(|_| stump(1, 0, 0.0, 1, 1)).collect();
        assert!(ExtractedModel::new(schema.clone(), cs.clone(), cl.clone(), f, ConceptId(0), 0).is_err());
        let f: Vec<_> = (0..3).map(|_| stump(1, 0, 0.0, 1, 7)).collect();
        assert!(ExtractedModel::new(schema.clone(), cs.clone(), cl.clone(), f, ConceptId(0), 0).is_err());
        let f: Vec<_> = (0..3).map(|_| stump(1, 0, 0.0, 1, 1)).collect();
        assert!(ExtractedModel::new(schema.clone(), cs.clone(), cl.clone(), f.clone(), ConceptId(3), 0).is_err());
        let mut model = ExtractedModel::new(schema, cs, cl, f, ConceptId(0), 0).unwrap();
        model.output_map[1] = Label::POSITIVE;
        assert!(model.validate().is_err());
    }

    #[test]
    fn start_concept_tie_goes_low() {
        let (schema, cs, cl) = toy_concepts();
        let mut seqs = Vec::new();
        for (h0, n) in [(0.0, 5), (1.0, 5), (2.0, 1)] {
            for _ in 0..n {
                let hidden = Matrix::from_rows(&[[h0], [h0]]).unwrap();
                seqs.push(
                    crate::data::TracedSequence::new(Matrix::zeros(1, 1), hidden, vec![Label::NEGATIVE], None, None)
                        .unwrap(),
                );
            }
        }
        let ds = TraceDataset::new(schema, seqs, crate::data::SplitTag::Train).unwrap();
        assert_eq!(derive_start_concept(&ds, &cs, &cl).unwrap(), ConceptId(0));
        let only_last = TraceDataset::new(ds.schema.clone(), ds.sequences[10..].to_vec(), ds.split).unwrap();
        assert_eq!(derive_start_concept(&only_last, &cs, &cl).unwrap(), ConceptId(2));
    }

    #[test]
    fn batch_of_one_matches_sequential() {
        let (schema, cs, cl) = toy_concepts();
        let f = vec![stump(1, 0, 0.5, 1, 2), stump(1, 0, 0.2, 0, 2), stump(1, 0, 0.8, 1, 2)];
        let model = ExtractedModel::new(schema, cs, cl, f, ConceptId(0), 0).unwrap();
        let x = Matrix::from_rows(&[[0.1], [0.9], [0.5], [0.3], [0.95]]).unwrap();
        for emit in [EmitOrder::PostTransition, EmitOrder::PreTransition] {
            let seq = classify_sequence(&model, &x, emit).unwrap();
            let batch = classify_batch(&model, &[&x], emit).unwrap();
            assert_eq!(batch[0].labels, seq.labels);
            assert_eq!(batch[0].concepts, seq.concepts());
        }
        assert_eq!(model.concepts.name(ConceptId(2)), "sick".to_string());
    }
}
