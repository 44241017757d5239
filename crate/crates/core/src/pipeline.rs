//! End-to-end extraction: cluster, name, build transition data, train,
//! pick the start concept, assemble.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::automaton::{derive_start_concept, ExtractedModel};
use crate::concepts::{self, GranularityReport, KMeansFit, KMeansParams};
use crate::data::{LabelSource, TraceDataset};
use crate::error::{Error, Result};
use crate::rng;
use crate::transitions::{build_transition_table, train_transitions, TrainConfig, TransitionTable};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KChoice {
    Fixed(usize),
    /// Most granular k (up to `max`) whose concept names are still distinct.
    Auto { max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: KChoice,
    pub theta: f64,
    pub window: usize,
    pub train: TrainConfig,
    pub seed: u64,
    pub kmeans: KMeansParams,
    /// Label stream used for majority labelling.
    pub label_source: LabelSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: KChoice::Fixed(2),
            theta: crate::DEFAULT_THETA,
            window: 0,
            train: TrainConfig::default(),
            seed: 0,
            kmeans: KMeansParams::default(),
            label_source: LabelSource::Predicted,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        match self.k {
            KChoice::Fixed(0) | KChoice::Auto { max: 0 } => {
                return Err(Error::InvalidArgument("k must be at least 1".into()))
            }
            _ => {}
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        self.train.validate()
    }
}

/// Model plus the intermediate products used for reporting and explanation.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub model: ExtractedModel,
    pub fit: KMeansFit,
    /// Unbalanced transition data.
    pub table: TransitionTable,
    pub granularity: Option<GranularityReport>,
}

pub fn extract_pipeline(cfg: &PipelineConfig, train: &TraceDataset) -> Result<ExtractedModel> {
    extract_with_artifacts(cfg, train).map(|e| e.model)
}

pub fn extract_with_artifacts(cfg: &PipelineConfig, train: &TraceDataset) -> Result<Extraction> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    if train.is_empty() {
        return Err(Error::EmptyDataset.in_stage("config"));
    }
    let (k, granularity) = match cfg.k {
        KChoice::Fixed(k) => (k, None),
        KChoice::Auto { max } => {
            let ks: Vec<usize> = (1..=max).collect();
            let report =
                concepts::sweep_granularity(train, &ks, cfg.theta, cfg.seed, cfg.kmeans, cfg.label_source)
                    .map_err(|e| e.in_stage("granularity sweep"))?;
            let k = report.most_granular_distinct().unwrap_or(1);
            (k, Some(report))
        }
    };
    let (points, labels) =
        concepts::hidden_points(train, cfg.label_source).map_err(|e| e.in_stage("clustering"))?;
    let fit = concepts::kmeans(&points, k, cfg.seed, cfg.kmeans).map_err(|e| e.in_stage("clustering"))?;
    let concept_set = concepts::name_concepts(&fit.assignments, k, &labels, cfg.theta, &train.schema.class_names)
        .map_err(|e| e.in_stage("concept naming"))?;
    let table = build_transition_table(train, &concept_set, &fit.clustering, cfg.window)
        .map_err(|e| e.in_stage("transition table"))?;
    let transitions = train_transitions(&table, &cfg.train, rng::derive_seed(cfg.seed, 2))
        .map_err(|e| e.in_stage("transition training"))?;
    let start = derive_start_concept(train, &concept_set, &fit.clustering).map_err(|e| e.in_stage("start concept"))?;
    let model = ExtractedModel::new(
        train.schema.clone(),
        concept_set,
        fit.clustering.clone(),
        transitions,
        start,
        cfg.window,
    )
    .map_err(|e| e.in_stage("assembly"))?;
    Ok(Extraction {
        model,
        fit,
        table,
        granularity,
    })
}
