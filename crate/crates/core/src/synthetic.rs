//! Planted automata: synthetic traces with a known ground-truth state
//! machine, used to measure extraction quality exactly.
//!
//! Inputs live in the unit box `[0, 1]^n`. Each state's transition rule is a
//! list of axis-aligned boxes partitioning that domain, each naming the next
//! state. Inputs are drawn by picking one of the evaluating state's boxes
//! uniformly and sampling inside it, at least `margin` away from interior
//! box faces.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::automaton::{classify_dataset, EmitOrder, ExtractedModel};
use crate::data::{FeatureSchema, Label, SplitTag, TraceDataset, TracedSequence};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub next: usize,
}

impl Region {
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| {
            // half-open boxes, closed at the domain's upper face
            *v >= *lo && (*v < *hi || (*hi >= 1.0 && *v <= *hi))
        })
    }

    fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| (hi - lo).max(0.0)).product()
    }

    fn overlap(&self, other: &Region) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .map(|((a_lo, a_hi), (b_lo, b_hi))| (a_hi.min(*b_hi) - a_lo.max(*b_lo)).max(0.0))
            .product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedState {
    pub name: String,
    pub label: Label,
    pub center: Vec<f64>,
    pub rule: Vec<Region>,
}

/// Which input drives a transition.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lag {
    /// `s[t] = rule[s[t-1]](x[t])`.
    Current,
    /// `s[t] = rule[s[t-1]](x[t-1])`, with `s[1] = s[0]`.
    Previous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedAutomaton {
    pub schema: FeatureSchema,
    pub states: Vec<PlantedState>,
    pub start: usize,
    pub sigma: f64,
    pub margin: f64,
    pub lag: Lag,
}

impl PlantedAutomaton {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        self.schema.validate()?;
        let n = self.schema.width();
        if self.states.is_empty() || self.start >= self.states.len() {
            return bad("planted automaton needs states and a valid start".into());
        }
        if !(self.sigma >= 0.0) || !(0.0..0.5).contains(&self.margin) {
            return bad("sigma must be >= 0 and margin in [0, 0.5)".into());
        }
        let m = self.states[0].center.len();
        for (i, s) in self.states.iter().enumerate() {
            if s.center.len() != m || m == 0 {
                return bad(format!("state {i} center has the wrong width"));
            }
            if s.rule.is_empty() {
                return bad(format!("state {i} has no transition regions"));
            }
            for r in &s.rule {
                if r.lower.len() != n || r.upper.len() != n || r.next >= self.states.len() {
                    return bad(format!("state {i} has a malformed region"));
                }
                if r.lower.iter().zip(&r.upper).any(|(lo, hi)| !(0.0 <= *lo && lo < hi && *hi <= 1.0)) {
                    return bad(format!("state {i} has a region outside the unit box"));
                }
            }
            let total: f64 = s.rule.iter().map(Region::volume).sum();
            let overlaps = s
                .rule
                .iter()
                .enumerate()
                .any(|(a, ra)| s.rule[a + 1..].iter().any(|rb| ra.overlap(rb) > 1e-12));
            if overlaps || (total - 1.0).abs() > 1e-9 {
                return bad(format!("state {i} regions do not partition the unit box"));
            }
            for other in &self.states[..i] {
                let d = libm::sqrt(squared_distance(&s.center, &other.center));
                if d < 8.0 * self.sigma {
                    return bad(format!("state centers closer than 8 sigma ({d} < {})", 8.0 * self.sigma));
                }
            }
        }
        Ok(())
    }

    pub fn hidden_width(&self) -> usize {
        self.states[0].center.len()
    }

    /// Next state from `state` for input `x`.
    pub fn step(&self, state: usize, x: &[f64]) -> usize {
        self.states[state]
            .rule
            .iter()
            .find(|r| r.contains(x))
            .map_or(state, |r| r.next)
    }

    fn sample_region(&self, state: usize, rng: &mut rng::Rng) -> (Vec<f64>, usize) {
        let rule = &self.states[state].rule;
        let r = &rule[rng.random_range(0..rule.len())];
        let x = r
            .lower
            .iter()
            .zip(&r.upper)
            .map(|(&lo, &hi)| {
                let lo = if lo > 0.0 { lo + self.margin } else { lo };
                let hi = if hi < 1.0 { hi - self.margin } else { hi };
                rng.random_range(lo..hi)
            })
            .collect();
        (x, r.next)
    }
}

/// Generated traces plus the planted state path `s_0..s_T` of every sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTraces {
    pub dataset: TraceDataset,
    pub states: Vec<Vec<usize>>,
}

pub fn generate(pa: &PlantedAutomaton, num_sequences: usize, length: usize, seed: u64) -> Result<SyntheticTraces> {
    pa.validate()?;
    if length < 2 {
        return Err(Error::InvalidArgument("synthetic sequences need T >= 2".into()));
    }
    if num_sequences == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = pa.schema.width();
    let m = pa.hidden_width();
    let mut sequences = Vec::with_capacity(num_sequences);
    let mut all_states = Vec::with_capacity(num_sequences);
    for i in 0..num_sequences {
        let mut rng = rng::seeded(rng::derive_seed(seed, i as u64));
        let mut inputs = Matrix::with_cols(n);
        let mut hidden = Matrix::with_cols(m);
        let mut states = vec![pa.start];
        let emit_hidden = |s: usize, hidden: &mut Matrix, rng: &mut rng::Rng| {
            let h: Vec<f64> = pa.states[s]
                .center
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + pa.sigma * z
                })
                .collect();
            hidden.push_row(&h)
        };
        emit_hidden(pa.start, &mut hidden, &mut rng)?;
        let mut pending = pa.start;
        for _ in 0..length {
            let prev = *states.last().expect("start state");
            let (x, s) = match pa.lag {
                Lag::Current => pa.sample_region(prev, &mut rng),
                Lag::Previous => {
                    let s = pending;
                    let (x, next) = pa.sample_region(s, &mut rng);
                    pending = next;
                    (x, s)
                }
            };
            inputs.push_row(&x)?;
            emit_hidden(s, &mut hidden, &mut rng)?;
            states.push(s);
        }
        let labels: Vec<Label> = states[1..].iter().map(|&s| pa.states[s].label).collect();
        sequences.push(TracedSequence::new(inputs, hidden, labels.clone(), None, Some(labels))?);
        all_states.push(states);
    }
    Ok(SyntheticTraces {
        dataset: TraceDataset::new(pa.schema.clone(), sequences, SplitTag::Train)?,
        states: all_states,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFidelity {
    pub fidelity: f64,
    /// Planted state matched to each concept, if any.
    pub mapping: Vec<Option<usize>>,
    /// Concept count differs from the planted state count.
    pub count_mismatch: bool,
    pub compared_steps: usize,
}

/// Fraction of steps whose reached concept equals the planted state under
/// the best one-to-one concept/state matching.
pub fn oracle_fidelity(pa: &PlantedAutomaton, model: &ExtractedModel, traces: &SyntheticTraces) -> Result<OracleFidelity> {
    let trajectories = classify_dataset(model, &traces.dataset, EmitOrder::PostTransition)?;
    let k = model.k();
    let s = pa.states.len();
    let mut confusion = vec![vec![0usize; s]; k];
    let mut total = 0usize;
    for (traj, states) in trajectories.iter().zip(&traces.states) {
        for (i, c) in traj.concepts.iter().enumerate() {
            let t = model.window + 1 + i;
            confusion[c.0][states[t]] += 1;
            total += 1;
        }
    }
    let mapping = best_assignment(&confusion);
    let matched: usize = mapping
        .iter()
        .enumerate()
        .filter_map(|(c, st)| st.map(|st| confusion[c][st]))
        .sum();
    Ok(OracleFidelity {
        fidelity: if total == 0 { 0.0 } else { matched as f64 / total as f64 },
        mapping,
        count_mismatch: k != s,
        compared_steps: total,
    })
}

/// Maximum-weight matching of rows to columns (Hungarian algorithm on the
/// zero-padded square matrix). Returns the column assigned to each row.
pub fn best_assignment(weights: &[Vec<usize>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    if size == 0 {
        return Vec::new();
    }
    let max = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            max - weights[i][j] as i64
        } else {
            max
        }
    };
    // 1-based potentials formulation
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; size + 1];
    let mut v = vec![0i64; size + 1];
    let mut p = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=size {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Named benchmark automata.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Two states; next state is set by `x0 <= 0.5`. Noise `sigma = separation / 10`.
    TwoStateThreshold,
    /// [`Preset::TwoStateThreshold`] with zero hidden-state noise.
    TwoStateExact,
    /// Three states whose rules need depth-2 trees.
    ThreeState,
    /// Two states driven by the previous input only.
    LagOne,
    /// Same dynamics as [`Preset::TwoStateThreshold`]; the current input carries all signal.
    Memoryless,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::TwoStateThreshold,
        Preset::TwoStateExact,
        Preset::ThreeState,
        Preset::LagOne,
        Preset::Memoryless,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::TwoStateThreshold => "two-state-threshold",
            Preset::TwoStateExact => "two-state-exact",
            Preset::ThreeState => "three-state",
            Preset::LagOne => "lag-one",
            Preset::Memoryless => "memoryless",
        }
    }

    pub fn automaton(self) -> PlantedAutomaton {
        let separation = 1.0;
        let schema = FeatureSchema::continuous(&["x0", "x1"], "negative", "positive").expect("valid schema");
        let split_x0 = |low: usize, high: usize| {
            vec![
                Region {
                    lower: vec![0.0, 0.0],
                    upper: vec![0.5, 1.0],
                    next: low,
                },
                Region {
                    lower: vec![0.5, 0.0],
                    upper: vec![1.0, 1.0],
                    next: high,
                },
            ]
        };
        let two_state = |sigma: f64, lag: Lag| PlantedAutomaton {
            schema: schema.clone(),
            states: vec![
                PlantedState {
                    name: "low".into(),
                    label: Label::NEGATIVE,
                    center: vec![0.0, 0.0, 0.0],
                    rule: split_x0(0, 1),
                },
                PlantedState {
                    name: "high".into(),
                    label: Label::POSITIVE,
                    center: vec![separation, 0.0, 0.0],
                    rule: split_x0(0, 1),
                },
            ],
            start: 0,
            sigma,
            margin: 0.02,
            lag,
        };
        match self {
            Preset::TwoStateThreshold | Preset::Memoryless => two_state(separation / 10.0, Lag::Current),
            Preset::TwoStateExact => two_state(0.0, Lag::Current),
            Preset::LagOne => two_state(separation / 10.0, Lag::Previous),
            Preset::ThreeState => {
                let region = |lo: [f64; 2], hi: [f64; 2], next: usize| Region {
                    lower: lo.to_vec(),
                    upper: hi.to_vec(),
                    next,
                };
                PlantedAutomaton {
                    schema,
                    states: vec![
                        PlantedState {
                            name: "rest".into(),
                            label: Label::NEGATIVE,
                            center: vec![0.0, 0.0, 0.0],
                            rule: split_x0(0, 1),
                        },
                        PlantedState {
                            name: "onset".into(),
                            label: Label::POSITIVE,
                            center: vec![separation, 0.0, 0.0],
                            rule: vec![
                                region([0.0, 0.0], [1.0, 0.5], 0),
                                region([0.0, 0.5], [0.5, 1.0], 1),
                                region([0.5, 0.5], [1.0, 1.0], 2),
                            ],
                        },
                        PlantedState {
                            name: "active".into(),
                            label: Label::POSITIVE,
                            center: vec![0.0, separation, 0.0],
                            rule: vec![
                                region([0.0, 0.0], [0.3, 1.0], 1),
                                region([0.3, 0.0], [1.0, 1.0], 2),
                            ],
                        },
                    ],
                    start: 0,
                    sigma: separation / 10.0,
                    margin: 0.02,
                    lag: Lag::Current,
                }
            }
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{s}`")))
    }
}

impl core::fmt::Display for Preset {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// State names of a preset, for reports.
pub fn state_names(pa: &PlantedAutomaton) -> Vec<String> {
    pa.states.iter().map(|s| s.name.to_string()).collect()
}
