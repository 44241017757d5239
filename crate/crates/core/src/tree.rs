//! Binary CART classification tree with Gini impurity.
//!
//! Split search visits features in index order and thresholds in ascending
//! order and only replaces the incumbent on a strictly larger impurity
//! decrease, so ties resolve to the lowest feature, then lowest threshold.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::concepts::ConceptId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Minimum number of samples in each child of a split.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 2,
            min_leaf: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        prediction: ConceptId,
        /// Training samples per entry of the tree's `targets`.
        counts: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub input_width: usize,
    /// Sorted target concepts seen in training.
    pub targets: Vec<ConceptId>,
    pub max_depth: usize,
    /// Node arena; the root is node 0.
    pub nodes: Vec<TreeNode>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t) * (c as f64 / t)).sum::<f64>()
}

fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a> {
    inputs: &'a Matrix,
    classes: Vec<usize>,
    n_classes: usize,
    params: TreeParams,
    targets: &'a [ConceptId],
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &r in rows {
            counts[self.classes[r]] += 1;
        }
        counts
    }

    fn best_split(&self, rows: &[usize], parent: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let parent_gini = gini(parent, n);
        let mut best: Option<BestSplit> = None;
        let mut sorted = rows.to_vec();
        for feature in 0..self.inputs.cols() {
            sorted.sort_by(|&a, &b| {
                self.inputs
                    .get(a, feature)
                    .total_cmp(&self.inputs.get(b, feature))
                    .then(a.cmp(&b))
            });
            let mut left = vec![0usize; self.n_classes];
            for i in 0..n - 1 {
                left[self.classes[sorted[i]]] += 1;
                let lo = self.inputs.get(sorted[i], feature);
                let hi = self.inputs.get(sorted[i + 1], feature);
                let n_left = i + 1;
                let n_right = n - n_left;
                if lo == hi || n_left < self.params.min_leaf || n_right < self.params.min_leaf {
                    continue;
                }
                let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let weighted = (n_left as f64 * gini(&left, n_left) + n_right as f64 * gini(&right, n_right)) / n as f64;
                let decrease = parent_gini - weighted;
                if best.as_ref().is_none_or(|b| decrease > b.decrease + 1e-12) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }

    fn leaf(&mut self, counts: Vec<usize>) -> usize {
        let prediction = self.targets[argmax_lowest(&counts)];
        self.nodes.push(TreeNode::Leaf { prediction, counts });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: &[usize], depth: usize) -> usize {
        let counts = self.counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf.max(1) {
            return self.leaf(counts);
        }
        let Some(split) = self.best_split(rows, &counts) else {
            return self.leaf(counts);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.inputs.get(r, split.feature) <= split.threshold);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(&left_rows, depth + 1);
        let right = self.grow(&right_rows, depth + 1);
        if let TreeNode::Split { left: l, right: r, .. } = &mut self.nodes[id] {
            *l = left;
            *r = right;
        }
        id
    }
}

impl DecisionTree {
    /// Greedy CART induction. Internal nodes split while impure, shallower
    /// than `max_depth`, and a split leaving `min_leaf` samples per side exists.
    pub fn fit(inputs: &Matrix, targets: &[ConceptId], params: TreeParams) -> Result<Self> {
        if inputs.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if inputs.rows() != targets.len() {
            return Err(Error::Dimension(alloc::format!(
                "{} rows but {} targets",
                inputs.rows(),
                targets.len()
            )));
        }
        if !inputs.is_finite() {
            return Err(Error::NonFinite("tree training inputs"));
        }
        let mut classes_sorted = targets.to_vec();
        classes_sorted.sort_unstable();
        classes_sorted.dedup();
        let classes = targets
            .iter()
            .map(|t| classes_sorted.binary_search(t).expect("present"))
            .collect();
        let mut builder = Builder {
            inputs,
            classes,
            n_classes: classes_sorted.len(),
            params,
            targets: &classes_sorted,
            nodes: Vec::new(),
        };
        let rows: Vec<usize> = (0..inputs.rows()).collect();
        builder.grow(&rows, 0);
        let nodes = builder.nodes;
        Ok(Self {
            input_width: inputs.cols(),
            targets: classes_sorted,
            max_depth: params.max_depth,
            nodes,
        })
    }

    /// Single-leaf tree that always predicts `target`.
    pub fn constant(target: ConceptId, input_width: usize) -> Self {
        Self {
            input_width,
            targets: vec![target],
            max_depth: 0,
            nodes: vec![TreeNode::Leaf {
                prediction: target,
                counts: vec![0],
            }],
        }
    }

    /// Index of the leaf reached by `x` (width not checked).
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<ConceptId> {
        if x.len() != self.input_width {
            return Err(Error::WidthMismatch {
                expected: self.input_width,
                actual: x.len(),
            });
        }
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { prediction, .. } => Ok(*prediction),
            TreeNode::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Structural checks for trees read from disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidModel(alloc::format!("decision tree: {msg}")));
        if self.nodes.is_empty() {
            return bad("no nodes");
        }
        if self.targets.is_empty() {
            return bad("no targets");
        }
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() || visited[i] {
                return bad("child index out of range or shared");
            }
            visited[i] = true;
            match &self.nodes[i] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= self.input_width || !threshold.is_finite() {
                        return bad("split feature out of range");
                    }
                    stack.push(*left);
                    stack.push(*right);
                }
                TreeNode::Leaf { prediction, counts } => {
                    if !self.targets.contains(prediction) || counts.len() != self.targets.len() {
                        return bad("leaf prediction outside targets");
                    }
                }
            }
        }
        if visited.iter().any(|v| !v) {
            return bad("unreachable node");
        }
        Ok(())
    }
}
