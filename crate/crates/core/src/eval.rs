//! Agreement metrics between an extracted model and its source predictions,
//! plus window sweeps and repeated-seed runs.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::automaton::{classify_dataset, EmitOrder, ExtractedModel};
use crate::data::{Label, LabelSource, TraceDataset};
use crate::error::{Error, Result};
use crate::pipeline::{extract_pipeline, PipelineConfig};
use crate::transitions::ClassifierKind;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// Every emitted step `t` in `(w, T]`.
    #[default]
    PerTimestep,
    /// Final label of each sequence only.
    PerSequence,
}

impl core::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "timestep" | "per-timestep" => Ok(Self::PerTimestep),
            "sequence" | "per-sequence" => Ok(Self::PerSequence),
            other => Err(Error::InvalidArgument(format!("unknown granularity `{other}`"))),
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn add(&mut self, reference: Label, predicted: Label, positive: Label) {
        match (reference == positive, predicted == positive) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn agreement(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub granularity: Granularity,
    pub positive: Label,
    /// Source predictions as reference, extracted labels as prediction.
    pub confusion: Confusion,
    pub fidelity: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Precision or recall had a zero denominator and was set to 0.
    pub no_positive: bool,
    /// Extracted labels against ground truth, when the data carries it.
    pub accuracy_vs_truth: Option<f64>,
}

impl ApproximationReport {
    pub fn from_confusion(
        confusion: Confusion,
        granularity: Granularity,
        positive: Label,
        accuracy_vs_truth: Option<f64>,
    ) -> Self {
        let predicted_pos = confusion.tp + confusion.fp;
        let actual_pos = confusion.tp + confusion.fn_;
        let precision = ratio(confusion.tp, predicted_pos);
        let recall = ratio(confusion.tp, actual_pos);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            granularity,
            positive,
            confusion,
            fidelity: confusion.agreement(),
            precision,
            recall,
            f1,
            no_positive: predicted_pos == 0 || actual_pos == 0,
            accuracy_vs_truth,
        }
    }
}

/// Pairs up reference and extracted label streams at the requested granularity.
fn compare_streams<'a>(
    reference: impl Iterator<Item = (&'a [Label], &'a [Label])>,
    granularity: Granularity,
    positive: Label,
) -> Confusion {
    let mut c = Confusion::default();
    for (src, ext) in reference {
        match granularity {
            Granularity::PerTimestep => {
                for (r, p) in src.iter().zip(ext) {
                    c.add(*r, *p, positive);
                }
            }
            Granularity::PerSequence => {
                if let (Some(r), Some(p)) = (src.last(), ext.last()) {
                    c.add(*r, *p, positive);
                }
            }
        }
    }
    c
}

/// Metrics from pooled label lists, used directly by tests and by [`evaluate`].
pub fn score_labels(
    source: &[Vec<Label>],
    extracted: &[Vec<Label>],
    granularity: Granularity,
    positive: Label,
) -> Result<ApproximationReport> {
    if source.len() != extracted.len() {
        return Err(Error::Dimension(format!(
            "{} reference streams vs {} extracted",
            source.len(),
            extracted.len()
        )));
    }
    for (s, e) in source.iter().zip(extracted) {
        if s.len() != e.len() {
            return Err(Error::Dimension(format!("stream lengths differ: {} vs {}", s.len(), e.len())));
        }
    }
    let c = compare_streams(
        source.iter().zip(extracted).map(|(s, e)| (s.as_slice(), e.as_slice())),
        granularity,
        positive,
    );
    Ok(ApproximationReport::from_confusion(c, granularity, positive, None))
}

pub fn evaluate(
    model: &ExtractedModel,
    ds: &TraceDataset,
    granularity: Granularity,
    positive: Label,
) -> Result<ApproximationReport> {
    let w = model.window;
    let trajectories = classify_dataset(model, ds, EmitOrder::PostTransition)?;
    let source: Vec<&[Label]> = ds.sequences.iter().map(|s| &s.pred_labels[w..]).collect();
    let confusion = compare_streams(
        source.iter().copied().zip(trajectories.iter().map(|t| t.labels.as_slice())),
        granularity,
        positive,
    );
    let truth: Option<Vec<&[Label]>> = ds
        .sequences
        .iter()
        .map(|s| s.labels(LabelSource::Truth).map(|l| &l[w..]))
        .collect();
    let accuracy_vs_truth = truth.map(|truth| {
        compare_streams(
            truth.into_iter().zip(trajectories.iter().map(|t| t.labels.as_slice())),
            granularity,
            positive,
        )
        .agreement()
    });
    Ok(ApproximationReport::from_confusion(confusion, granularity, positive, accuracy_vs_truth))
}

/// Per-run values with mean and population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            values,
            mean,
            std: libm::sqrt(var),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seeds: Vec<u64>,
    pub runs: Vec<ApproximationReport>,
    pub fidelity: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
    pub accuracy_vs_truth: Option<MetricSummary>,
}

impl RunSummary {
    pub fn from_runs(seeds: Vec<u64>, runs: Vec<ApproximationReport>) -> Self {
        let pick = |f: fn(&ApproximationReport) -> f64| MetricSummary::from_values(runs.iter().map(f).collect());
        let truth: Option<Vec<f64>> = runs.iter().map(|r| r.accuracy_vs_truth).collect();
        Self {
            fidelity: pick(|r| r.fidelity),
            precision: pick(|r| r.precision),
            recall: pick(|r| r.recall),
            f1: pick(|r| r.f1),
            accuracy_vs_truth: truth.map(MetricSummary::from_values),
            seeds,
            runs,
        }
    }
}

fn run_seeds(
    cfg: &PipelineConfig,
    train: &TraceDataset,
    test: &TraceDataset,
    seeds: &[u64],
    granularity: Granularity,
) -> Result<RunSummary> {
    let runs = seeds
        .iter()
        .map(|&seed| {
            let cfg = PipelineConfig { seed, ..cfg.clone() };
            let model = extract_pipeline(&cfg, train)?;
            evaluate(&model, test, granularity, Label::POSITIVE)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunSummary::from_runs(seeds.to_vec(), runs))
}

/// Re-runs the whole pipeline once per seed.
pub fn repeat_runs(
    cfg: &PipelineConfig,
    train: &TraceDataset,
    test: &TraceDataset,
    seeds: &[u64],
    granularity: Granularity,
) -> Result<RunSummary> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument("repeat_runs needs at least two seeds".into()));
    }
    run_seeds(cfg, train, test, seeds, granularity)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCell {
    pub window: usize,
    pub summary: RunSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSweepResult {
    pub kind: ClassifierKind,
    pub cells: Vec<WindowCell>,
}

impl WindowSweepResult {
    pub fn cell(&self, window: usize) -> Option<&WindowCell> {
        self.cells.iter().find(|c| c.window == window)
    }
}

pub fn sweep_window(
    train: &TraceDataset,
    test: &TraceDataset,
    cfg: &PipelineConfig,
    windows: &[usize],
    seeds: &[u64],
    granularity: Granularity,
) -> Result<WindowSweepResult> {
    if windows.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("window sweep needs windows and seeds".into()));
    }
    let shortest = train.min_len().min(test.min_len());
    let widest = windows.iter().copied().max().unwrap_or(0);
    if widest + 1 >= shortest {
        return Err(Error::WindowTooLarge {
            window: widest,
            length: shortest,
        });
    }
    let cells = windows
        .iter()
        .map(|&window| {
            let cfg = PipelineConfig { window, ..cfg.clone() };
            Ok(WindowCell {
                window,
                summary: run_seeds(&cfg, train, test, seeds, granularity)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowSweepResult {
        kind: cfg.train.kind,
        cells,
    })
}
