//! Explanations for transition classifiers: permutation importance, tree
//! decision paths, a Gaussian-perturbation linear surrogate, and DOT text.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::automaton::{ExtractedModel, StepRecord};
use crate::concepts::{ConceptId, ConceptSet};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::transitions::{TransitionClassifier, TransitionData};
use crate::tree::{DecisionTree, TreeNode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: usize,
    pub name: String,
    /// Mean accuracy drop over repeats; may be negative.
    pub raw: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportanceReport {
    pub baseline_accuracy: f64,
    pub features: Vec<FeatureImportance>,
    pub repeats: usize,
    pub seed: u64,
}

impl FeatureImportanceReport {
    /// Highest normalized scores first; ties keep column order.
    pub fn top(&self, n: usize) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by(|a, b| b.normalized.total_cmp(&a.normalized).then(a.feature.cmp(&b.feature)));
        v.truncate(n);
        v
    }
}

pub fn permutation_importance(
    f: &TransitionClassifier,
    data: &TransitionData,
    repeats: usize,
    seed: u64,
    names: &[String],
) -> Result<FeatureImportanceReport> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let width = data.width();
    if f.input_width() != width {
        return Err(Error::WidthMismatch {
            expected: f.input_width(),
            actual: width,
        });
    }
    if names.len() != width {
        return Err(Error::Dimension(format!("{} feature names for width {width}", names.len())));
    }
    let accuracy = |inputs: &Matrix| -> Result<f64> {
        let mut hits = 0usize;
        for (x, t) in inputs.iter_rows().zip(&data.targets) {
            if f.predict(x)? == *t {
                hits += 1;
            }
        }
        Ok(hits as f64 / data.len() as f64)
    };
    let baseline = accuracy(&data.inputs)?;
    let mut raw = Vec::with_capacity(width);
    let mut shuffled = data.inputs.clone();
    for j in 0..width {
        let mut rng = rng::seeded(rng::derive_seed(seed, j as u64));
        let mut column = data.inputs.column(j);
        let mut drop = 0.0;
        for _ in 0..repeats {
            column.shuffle(&mut rng);
            for (i, v) in column.iter().enumerate() {
                shuffled.set(i, j, *v);
            }
            drop += baseline - accuracy(&shuffled)?;
        }
        for i in 0..data.len() {
            shuffled.set(i, j, data.inputs.get(i, j));
        }
        raw.push(drop / repeats as f64);
    }
    let total: f64 = raw.iter().map(|r| r.max(0.0)).sum();
    let features = raw
        .iter()
        .enumerate()
        .map(|(j, &r)| FeatureImportance {
            feature: j,
            name: names[j].clone(),
            raw: r,
            normalized: if total > 0.0 { r.max(0.0) / total } else { 0.0 },
        })
        .collect();
    Ok(FeatureImportanceReport {
        baseline_accuracy: baseline,
        features,
        repeats,
        seed,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Le,
    Gt,
}

impl Branch {
    pub fn symbol(self) -> &'static str {
        match self {
            Branch::Le => "<=",
            Branch::Gt => ">",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub node: usize,
    pub feature: usize,
    pub threshold: f64,
    pub value: f64,
    pub branch: Branch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionPath {
    pub steps: Vec<PathStep>,
    pub leaf: usize,
    pub prediction: ConceptId,
}

impl DecisionPath {
    /// Walks `tree` along the recorded branches, checking every comparison
    /// against the recorded value, and returns the leaf's prediction.
    pub fn replay(&self, tree: &DecisionTree) -> Option<ConceptId> {
        let mut node = 0;
        for step in &self.steps {
            let TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } = &tree.nodes[node]
            else {
                return None;
            };
            let taken = if step.value <= *threshold { Branch::Le } else { Branch::Gt };
            if step.node != node || step.feature != *feature || step.threshold != *threshold || taken != step.branch {
                return None;
            }
            node = if taken == Branch::Le { *left } else { *right };
        }
        match &tree.nodes[node] {
            TreeNode::Leaf { prediction, .. } if node == self.leaf => Some(*prediction),
            _ => None,
        }
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let name = names.get(s.feature).map_or("?", String::as_str);
            let _ = writeln!(out, "{name} = {} {} {}", s.value, s.branch.symbol(), s.threshold);
        }
        out
    }
}

pub fn decision_path(tree: &DecisionTree, x: &[f64]) -> Result<DecisionPath> {
    if x.len() != tree.input_width {
        return Err(Error::WidthMismatch {
            expected: tree.input_width,
            actual: x.len(),
        });
    }
    let mut steps = Vec::new();
    let mut node = 0;
    loop {
        match &tree.nodes[node] {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let branch = if x[*feature] <= *threshold { Branch::Le } else { Branch::Gt };
                steps.push(PathStep {
                    node,
                    feature: *feature,
                    threshold: *threshold,
                    value: x[*feature],
                    branch,
                });
                node = if branch == Branch::Le { *left } else { *right };
            }
            TreeNode::Leaf { prediction, .. } => {
                return Ok(DecisionPath {
                    steps,
                    leaf: node,
                    prediction: *prediction,
                })
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Defaults to `10 * width` when unset.
    pub samples: Option<usize>,
    /// In standardized units; defaults to `0.75 * sqrt(width)`.
    pub kernel_width: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateWeight {
    pub feature: usize,
    /// Change in the predicted-class indicator per training standard deviation.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSurrogate {
    pub target: ConceptId,
    /// Sorted by decreasing magnitude; ties keep column order.
    pub weights: Vec<SurrogateWeight>,
    pub intercept: f64,
    /// Weighted R²; `None` when the classifier was constant on all samples.
    pub r2: Option<f64>,
    pub constant: bool,
    /// The normal equations were singular and a small ridge term was added.
    pub ridge_fallback: bool,
    pub kernel_width: f64,
    pub samples: usize,
}

impl LinearSurrogate {
    pub fn weight_of(&self, feature: usize) -> f64 {
        self.weights.iter().find(|w| w.feature == feature).map_or(0.0, |w| w.weight)
    }
}

/// Fits a locally weighted linear model of "does `f` still predict the
/// same concept" around `x`. Perturbations are `x + scale * N(0, 1)` per
/// feature; `scales` are typically the training standard deviations.
pub fn local_linear_surrogate(
    f: &TransitionClassifier,
    x: &[f64],
    scales: &[f64],
    cfg: &SurrogateConfig,
) -> Result<LinearSurrogate> {
    let p = x.len();
    if p != f.input_width() {
        return Err(Error::WidthMismatch {
            expected: f.input_width(),
            actual: p,
        });
    }
    if scales.len() != p {
        return Err(Error::Dimension(format!("{} scales for width {p}", scales.len())));
    }
    let samples = cfg.samples.unwrap_or(10 * p);
    if samples < 10 * p {
        return Err(Error::InvalidArgument(format!("surrogate needs at least {} samples, got {samples}", 10 * p)));
    }
    let kernel_width = cfg.kernel_width.unwrap_or(0.75 * libm::sqrt(p as f64));
    if !(kernel_width > 0.0) {
        return Err(Error::InvalidArgument("kernel width must be positive".into()));
    }
    let scales: Vec<f64> = scales
        .iter()
        .map(|&s| if s.is_finite() && s > 0.0 { s } else { 1.0 })
        .collect();
    let target = f.predict(x)?;

    let mut rng = rng::seeded(cfg.seed);
    let mut design = Matrix::with_cols(p);
    let mut y = Vec::with_capacity(samples);
    let mut w = Vec::with_capacity(samples);
    let mut probe = vec![0.0; p];
    let mut z = vec![0.0; p];
    for _ in 0..samples {
        for j in 0..p {
            z[j] = StandardNormal.sample(&mut rng);
            probe[j] = x[j] + scales[j] * z[j];
        }
        let d2: f64 = z.iter().map(|v| v * v).sum();
        design.push_row(&z)?;
        y.push(if f.predict(&probe)? == target { 1.0 } else { 0.0 });
        w.push(libm::exp(-d2 / (kernel_width * kernel_width)));
    }

    let first = y[0];
    if y.iter().all(|v| *v == first) {
        return Ok(LinearSurrogate {
            target,
            weights: (0..p).map(|feature| SurrogateWeight { feature, weight: 0.0 }).collect(),
            intercept: first,
            r2: None,
            constant: true,
            ridge_fallback: false,
            kernel_width,
            samples,
        });
    }

    // normal equations over [1, z_1 .. z_p]
    let q = p + 1;
    let mut a = vec![0.0; q * q];
    let mut b = vec![0.0; q];
    let mut row = vec![0.0; q];
    for (i, zi) in design.iter_rows().enumerate() {
        row[0] = 1.0;
        row[1..].copy_from_slice(zi);
        for r in 0..q {
            b[r] += w[i] * row[r] * y[i];
            for c in 0..q {
                a[r * q + c] += w[i] * row[r] * row[c];
            }
        }
    }
    let (beta, ridge_fallback) = match solve(a.clone(), b.clone(), q) {
        Some(beta) => (beta, false),
        None => {
            let trace: f64 = (0..q).map(|i| a[i * q + i]).sum();
            let lambda = 1e-6 * (trace / q as f64).max(1e-12);
            for i in 1..q {
                a[i * q + i] += lambda;
            }
            let beta = solve(a, b, q).ok_or(Error::NonFinite("surrogate system"))?;
            (beta, true)
        }
    };
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("surrogate weights"));
    }

    let wsum: f64 = w.iter().sum();
    let ybar = w.iter().zip(&y).map(|(wi, yi)| wi * yi).sum::<f64>() / wsum;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (i, zi) in design.iter_rows().enumerate() {
        let pred = beta[0] + zi.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        ss_res += w[i] * (y[i] - pred) * (y[i] - pred);
        ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    let r2 = if ss_tot > 0.0 { Some(1.0 - ss_res / ss_tot) } else { None };

    let mut weights: Vec<SurrogateWeight> = beta[1..]
        .iter()
        .enumerate()
        .map(|(feature, &weight)| SurrogateWeight { feature, weight })
        .collect();
    weights.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()).then(a.feature.cmp(&b.feature)));
    Ok(LinearSurrogate {
        target,
        weights,
        intercept: beta[0],
        r2,
        constant: false,
        ridge_fallback,
        kernel_width,
        samples,
    })
}

/// Gaussian elimination with partial pivoting; `None` on a (near) singular system.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() <= 1e-10 * scale {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            b.swap(col, pivot);
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LocalExplanation {
    DecisionPath(DecisionPath),
    LinearSurrogate(LinearSurrogate),
}

/// Explains one classification step: the tree path for tree classifiers,
/// a local surrogate otherwise.
pub fn explain_step(
    model: &ExtractedModel,
    step: &StepRecord,
    scales: &[f64],
    cfg: &SurrogateConfig,
) -> Result<LocalExplanation> {
    let f = model
        .transitions
        .get(step.previous.0)
        .ok_or_else(|| Error::InvalidArgument(format!("no classifier for concept {}", step.previous.0)))?;
    match f {
        TransitionClassifier::Dt(tree) => decision_path(tree, &step.window).map(LocalExplanation::DecisionPath),
        TransitionClassifier::Mlp(_) => {
            local_linear_surrogate(f, &step.window, scales, cfg).map(LocalExplanation::LinearSurrogate)
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// DOT rendering of a decision tree. Split nodes read `feature ≤ threshold`
/// with the left edge taken when true; leaves show the predicted concept
/// and the training counts for each target the tree has seen.
pub fn tree_to_dot(tree: &DecisionTree, feature_names: &[String], concepts: &ConceptSet) -> String {
    let mut out = String::from("digraph tree {\n  node [shape=box, fontname=\"Helvetica\"];\n");
    for (i, node) in tree.nodes.iter().enumerate() {
        match node {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let name = feature_names.get(*feature).map_or_else(|| format!("x{feature}"), Clone::clone);
                let _ = writeln!(out, "  n{i} [label=\"{} ≤ {threshold}\"];", escape(&name));
                let _ = writeln!(out, "  n{i} -> n{left} [label=\"true\"];");
                let _ = writeln!(out, "  n{i} -> n{right} [label=\"false\"];");
            }
            TreeNode::Leaf { prediction, counts } => {
                let mut label = escape(concepts.name(*prediction));
                for (t, c) in tree.targets.iter().zip(counts) {
                    let _ = write!(label, "\\n{}: {c}", escape(concepts.name(*t)));
                }
                let _ = writeln!(out, "  n{i} [label=\"{label}\", style=rounded];");
            }
        }
    }
    out.push_str("}\n");
    out
}

/// DOT rendering of the concept graph. The start concept is drawn with a
/// double border; edges carry observed transition counts and the
/// fraction of the source concept's outgoing transitions.
pub fn concept_graph_dot(model: &ExtractedModel, counts: &[Vec<usize>]) -> String {
    let mut out = String::from("digraph concepts {\n  rankdir=LR;\n  node [shape=ellipse, fontname=\"Helvetica\"];\n");
    for c in model.concepts.ids() {
        let label = model.label_of(c);
        let class = model.schema.class_name(label);
        let start = if c == model.start_concept { ", peripheries=2" } else { "" };
        let _ = writeln!(
            out,
            "  c{} [label=\"{}\\n{}\"{start}];",
            c.0,
            escape(model.concepts.name(c)),
            escape(class)
        );
    }
    for (from, row) in counts.iter().enumerate() {
        let total: usize = row.iter().sum();
        for (to, &n) in row.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let freq = n as f64 / total as f64;
            let _ = writeln!(
                out,
                "  c{from} -> c{to} [label=\"{freq:.3} ({n})\", weight={n}, penwidth={:.2}];",
                1.0 + 3.0 * freq
            );
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::MlpParams;
    use crate::transitions::{train_transition_dt, train_transition_mlp};
    use crate::tree::TreeParams;
    use alloc::string::ToString;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("f{j}")).collect()
    }

    /// Targets follow `x[informative] > 0.5`; other columns are uniform noise.
    fn threshold_data(n: usize, p: usize, informative: &[usize], seed: u64) -> TransitionData {
        let mut rng = rng::seeded(seed);
        let mut inputs = Matrix::with_cols(p);
        let mut targets = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let score: f64 = informative.iter().map(|&j| row[j]).sum::<f64>() / informative.len() as f64;
            targets.push(ConceptId(usize::from(score > 0.5)));
            inputs.push_row(&row).unwrap();
        }
        TransitionData { inputs, targets }
    }

    #[test]
    fn ignored_features_score_exactly_zero() {
        let data = threshold_data(400, 4, &[2], 1);
        let f = train_transition_dt(&data, TreeParams { max_depth: 1, min_leaf: 1 }).unwrap();
        let report = permutation_importance(&f, &data, 5, 3, &names(4)).unwrap();
        for fi in &report.features {
            if fi.feature == 2 {
                assert_eq!(fi.normalized, 1.0);
                assert!(fi.raw > 0.3);
            } else {
                assert_eq!(fi.raw, 0.0);
                assert_eq!(fi.normalized, 0.0);
            }
        }
        assert_eq!(report.top(1)[0].name, "f2");
        assert_eq!(report, permutation_importance(&f, &data, 5, 3, &names(4)).unwrap());
    }

    #[test]
    fn mlp_ranks_informative_features_first() {
        let data = threshold_data(600, 5, &[1, 3], 2);
        let params = MlpParams {
            hidden: vec![16, 8],
            epochs: 60,
            ..MlpParams::default()
        };
        let f = train_transition_mlp(&data, &params).unwrap();
        let report = permutation_importance(&f, &data, 3, 0, &names(5)).unwrap();
        let mut top: Vec<usize> = report.top(2).iter().map(|f| f.feature).collect();
        top.sort();
        assert_eq!(top, vec![1, 3]);
        let sum: f64 = report.features.iter().map(|f| f.normalized).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn importance_preconditions() {
        let data = threshold_data(10, 2, &[0], 1);
        let f = train_transition_dt(&data, TreeParams::default()).unwrap();
        assert!(permutation_importance(&f, &data, 0, 0, &names(2)).is_err());
        assert!(permutation_importance(&f, &data, 1, 0, &names(3)).is_err());
    }

    fn stump(feature: usize, threshold: f64, width: usize) -> DecisionTree {
        DecisionTree {
            input_width: width,
            targets: vec![ConceptId(0), ConceptId(1)],
            max_depth: 1,
            nodes: vec![
                TreeNode::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf {
                    prediction: ConceptId(0),
                    counts: vec![5, 1],
                },
                TreeNode::Leaf {
                    prediction: ConceptId(1),
                    counts: vec![0, 7],
                },
            ],
        }
    }

    #[test]
    fn stump_paths() {
        let t = stump(1, 0.5, 3);
        let p = decision_path(&t, &[9.0, 0.2, 9.0]).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!((p.steps[0].feature, p.steps[0].threshold, p.steps[0].branch), (1, 0.5, Branch::Le));
        assert_eq!(p.prediction, ConceptId(0));
        assert_eq!(p.replay(&t), Some(ConceptId(0)));
        let leaf = DecisionTree::constant(ConceptId(4), 3);
        let p = decision_path(&leaf, &[0.0; 3]).unwrap();
        assert!(p.steps.is_empty());
        assert_eq!(p.prediction, ConceptId(4));
        assert!(decision_path(&t, &[0.0]).is_err());
    }

    #[test]
    fn tampered_path_does_not_replay() {
        let t = stump(0, 0.5, 1);
        let mut p = decision_path(&t, &[0.7]).unwrap();
        p.steps[0].branch = Branch::Le;
        assert_eq!(p.replay(&t), None);
    }

    proptest! {
        #[test]
        fn path_replays_to_prediction(seed in 0u64..500, probes in prop::collection::vec(prop::collection::vec(-0.2f64..1.2, 3), 1..20)) {
            let data = threshold_data(80, 3, &[0, 2], seed);
            let tree = match train_transition_dt(&data, TreeParams { max_depth: 3, min_leaf: 1 }).unwrap() {
                TransitionClassifier::Dt(t) => t,
                _ => unreachable!(),
            };
            for x in probes {
                let path = decision_path(&tree, &x).unwrap();
                prop_assert_eq!(path.replay(&tree), Some(tree.predict(&x).unwrap()));
                for s in &path.steps {
                    prop_assert_eq!(s.value, x[s.feature]);
                }
            }
        }
    }

    #[test]
    fn surrogate_finds_the_split_feature() {
        let f = TransitionClassifier::Dt(stump(2, 0.5, 4));
        let cfg = SurrogateConfig {
            samples: Some(2000),
            seed: 7,
            ..SurrogateConfig::default()
        };
        let x = [0.3, 0.9, 0.48, 0.1];
        let s = local_linear_surrogate(&f, &x, &[0.1; 4], &cfg).unwrap();
        assert_eq!(s.weights[0].feature, 2);
        for w in &s.weights[1..] {
            assert!(s.weight_of(2).abs() > w.weight.abs());
        }
        assert!(!s.constant && !s.ridge_fallback);
        assert!(s.r2.unwrap() > 0.0);
        assert_eq!(s, local_linear_surrogate(&f, &x, &[0.1; 4], &cfg).unwrap());
    }

    #[test]
    fn surrogate_on_constant_classifier() {
        let f = TransitionClassifier::Dt(stump(0, 100.0, 3));
        let s = local_linear_surrogate(&f, &[0.0; 3], &[1.0; 3], &SurrogateConfig::default()).unwrap();
        assert!(s.constant);
        assert!(s.r2.is_none());
        assert!(s.weights.iter().all(|w| w.weight.abs() < 1e-6));
        let too_few = SurrogateConfig {
            samples: Some(29),
            ..SurrogateConfig::default()
        };
        assert!(local_linear_surrogate(&f, &[0.0; 3], &[1.0; 3], &too_few).is_err());
    }

    #[test]
    fn solver_matches_known_system() {
        let x = solve(vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0], 2).is_none());
    }

    #[test]
    fn tree_dot_mentions_only_seen_targets() {
        let (_, concepts, _) = crate::automaton::tests::toy_concepts();
        let mut t = stump(0, 0.25, 2);
        t.targets = vec![ConceptId(1), ConceptId(2)];
        for (node, c) in t.nodes[1..].iter_mut().zip([1, 2]) {
            if let TreeNode::Leaf { prediction, .. } = node {
                *prediction = ConceptId(c);
            }
        }
        let dot = tree_to_dot(&t, &["Light[t]".to_string(), "CO2[t]".to_string()], &concepts);
        assert!(dot.contains("Light[t] ≤ 0.25"));
        assert!(dot.contains(concepts.name(ConceptId(1))));
        assert!(dot.contains(concepts.name(ConceptId(2))));
        assert!(!dot.contains(concepts.name(ConceptId(0))));
        assert_eq!(dot, tree_to_dot(&t, &["Light[t]".to_string(), "CO2[t]".to_string()], &concepts));

        let single = tree_to_dot(&DecisionTree::constant(ConceptId(1), 2), &names(2), &concepts);
        assert_eq!(single.matches("label=").count(), 1);
        assert!(!single.contains("->"));
    }
}
