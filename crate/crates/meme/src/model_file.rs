//! Model JSON.
//!
//! ```text
//! {"format_version": 1, "schema": {...}, "theta": 0.8, "window": 0,
//!  "start_concept": 0,
//!  "concepts": [{"id", "cluster", "majority_label", "majority_ratio",
//!                "name", "base_name", "size", "centroid": [...]}, ...],
//!  "output_map": {"0": 1, ...},
//!  "transitions": {"0": {"kind": "dt", ...}, ...},
//!  "clustering": {"inertia", "seed"}}
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use meme_core::concepts::Concept;
use meme_core::{Clustering, ConceptId, ConceptSet, ExtractedModel, FeatureSchema, Label, Matrix, TransitionClassifier};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fsutil::{read_json, write_json};

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ConceptEntry {
    #[serde(flatten)]
    concept: Concept,
    centroid: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ClusteringInfo {
    inertia: f64,
    seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    format_version: u32,
    schema: FeatureSchema,
    theta: f64,
    window: usize,
    start_concept: ConceptId,
    concepts: Vec<ConceptEntry>,
    output_map: BTreeMap<usize, Label>,
    transitions: BTreeMap<usize, TransitionClassifier>,
    clustering: ClusteringInfo,
}

impl From<&ExtractedModel> for ModelFile {
    fn from(m: &ExtractedModel) -> Self {
        Self {
            format_version: meme_core::FORMAT_VERSION,
            schema: m.schema.clone(),
            theta: m.concepts.theta,
            window: m.window,
            start_concept: m.start_concept,
            concepts: m
                .concepts
                .concepts
                .iter()
                .map(|c| ConceptEntry {
                    concept: c.clone(),
                    centroid: m.clustering.centroids.row(c.cluster).to_vec(),
                })
                .collect(),
            output_map: m.output_map.iter().copied().enumerate().collect(),
            transitions: m.transitions.iter().cloned().enumerate().collect(),
            clustering: ClusteringInfo {
                inertia: m.clustering.inertia,
                seed: m.clustering.seed,
            },
        }
    }
}

fn dense<T>(what: &str, map: BTreeMap<usize, T>, k: usize) -> meme_core::Result<Vec<T>> {
    if map.len() != k || map.keys().enumerate().any(|(i, &key)| i != key) {
        return Err(meme_core::Error::InvalidModel(format!("{what} must have keys 0..{k}")));
    }
    Ok(map.into_values().collect())
}

impl ModelFile {
    pub fn into_model(self) -> meme_core::Result<ExtractedModel> {
        if self.format_version != meme_core::FORMAT_VERSION {
            return Err(meme_core::Error::InvalidModel(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let k = self.concepts.len();
        if self.concepts.iter().enumerate().any(|(i, c)| c.concept.cluster != i) {
            return Err(meme_core::Error::InvalidModel("concept clusters must be 0..k in order".into()));
        }
        let centroids = Matrix::from_rows(&self.concepts.iter().map(|c| c.centroid.clone()).collect::<Vec<_>>())?;
        let model = ExtractedModel {
            concepts: ConceptSet {
                theta: self.theta,
                concepts: self.concepts.into_iter().map(|c| c.concept).collect(),
                class_names: self.schema.class_names.clone(),
            },
            schema: self.schema,
            clustering: Clustering {
                centroids,
                inertia: self.clustering.inertia,
                seed: self.clustering.seed,
            },
            transitions: dense("transitions", self.transitions, k)?,
            output_map: dense("output_map", self.output_map, k)?,
            start_concept: self.start_concept,
            window: self.window,
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn save_model(path: &Path, model: &ExtractedModel) -> Result<()> {
    write_json(path, &ModelFile::from(model))
}

pub fn load_model(path: &Path) -> Result<ExtractedModel> {
    let file: ModelFile = read_json(path)?;
    file.into_model().map_err(|e| CliError::parse(path, e))
}

pub fn model_to_string(model: &ExtractedModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from(model)).expect("model serializes")
}

pub fn model_from_str(text: &str) -> Result<ExtractedModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| CliError::parse("<model>", e))?;
    file.into_model().map_err(|e| CliError::parse("<model>", e))
}
