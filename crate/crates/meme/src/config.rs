//! Pipeline configuration files and run manifests.
//!
//! Configs are flat TOML tables; every key is optional and command-line
//! flags override file values:
//!
//! ```toml
//! train = "train.bin"
//! test = "test.bin"
//! k = 2            # or "auto"
//! k_max = 10
//! theta = 0.8
//! window = 0
//! seed = 0
//! classifier = "dt"
//! dt_max_depth = 2
//! dt_min_leaf = 1
//! mlp_hidden = [200, 50]
//! mlp_epochs = 20
//! mlp_learning_rate = 0.001
//! mlp_batch_size = 32
//! balance = true
//! label_source = "predicted"
//! ```
//!
//! A manifest JSON written by a previous run is also accepted; its
//! `config` object is used.

use std::path::{Path, PathBuf};

use meme_core::data::LabelSource;
use meme_core::pipeline::KChoice;
use meme_core::{ClassifierKind, PipelineConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSetting {
    Fixed(usize),
    Named(String),
}

impl std::str::FromStr for KSetting {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<usize>() {
            Ok(k) => Ok(Self::Fixed(k)),
            Err(_) if s == "auto" => Ok(Self::Named(s.to_string())),
            Err(_) => Err(CliError::Usage(format!("k must be a positive integer or `auto`, got `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<KSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_min_leaf: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mlp_hidden: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mlp_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mlp_learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mlp_batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub balance: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_source: Option<LabelSource>,
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: ConfigFile,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            let m: ManifestConfig = serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))?;
            Ok(m.config)
        } else {
            toml::from_str(&text).map_err(|e| CliError::parse(path, e))
        }
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            train,
            test,
            out,
            k,
            k_max,
            theta,
            window,
            seed,
            classifier,
            dt_max_depth,
            dt_min_leaf,
            mlp_hidden,
            mlp_epochs,
            mlp_learning_rate,
            mlp_batch_size,
            balance,
            label_source
        )
    }

    pub fn to_pipeline(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        cfg.k = match &self.k {
            None => cfg.k,
            Some(KSetting::Fixed(k)) => KChoice::Fixed(*k),
            Some(KSetting::Named(s)) if s == "auto" => KChoice::Auto {
                max: self.k_max.unwrap_or(10),
            },
            Some(KSetting::Named(s)) => return Err(CliError::Usage(format!("invalid k `{s}`"))),
        };
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.window {
            cfg.window = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.classifier {
            cfg.train.kind = v;
        }
        if let Some(v) = self.dt_max_depth {
            cfg.train.tree.max_depth = v;
        }
        if let Some(v) = self.dt_min_leaf {
            cfg.train.tree.min_leaf = v;
        }
        if let Some(v) = &self.mlp_hidden {
            cfg.train.mlp.hidden = v.clone();
        }
        if let Some(v) = self.mlp_epochs {
            cfg.train.mlp.epochs = v;
        }
        if let Some(v) = self.mlp_learning_rate {
            cfg.train.mlp.learning_rate = v;
        }
        if let Some(v) = self.mlp_batch_size {
            cfg.train.mlp.batch_size = v;
        }
        if let Some(v) = self.balance {
            cfg.train.balance = v;
        }
        if let Some(v) = self.label_source {
            cfg.label_source = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Written beside every output as `<output>.manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub format_version: u32,
    pub seed: u64,
    pub config: ConfigFile,
    /// Resolved pipeline settings, when the command ran the pipeline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineConfig>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Command-specific settings not covered by the pipeline config.
    #[serde(skip_serializing_if = "serde_json::Map::is_empty", default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            tool: "meme".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            format_version: meme_core::FORMAT_VERSION,
            seed,
            config: ConfigFile::default(),
            pipeline: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_overrides() {
        let file: ConfigFile = toml::from_str("k = \"auto\"\nk_max = 5\ntheta = 0.7\nclassifier = \"mlp\"\n").unwrap();
        let cli = ConfigFile {
            theta: Some(0.9),
            window: Some(2),
            ..ConfigFile::default()
        };
        let merged = file.merge(cli);
        let cfg = merged.to_pipeline().unwrap();
        assert_eq!(cfg.k, KChoice::Auto { max: 5 });
        assert_eq!(cfg.theta, 0.9);
        assert_eq!(cfg.window, 2);
        assert_eq!(cfg.train.kind, ClassifierKind::Mlp);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(toml::from_str::<ConfigFile>("bogus = 1").is_err());
        let bad = ConfigFile {
            theta: Some(1.2),
            ..ConfigFile::default()
        };
        assert!(bad.to_pipeline().is_err());
        let bad = ConfigFile {
            k: Some(KSetting::Named("many".into())),
            ..ConfigFile::default()
        };
        assert!(bad.to_pipeline().is_err());
        assert!("x".parse::<KSetting>().is_err());
        assert_eq!("3".parse::<KSetting>().unwrap(), KSetting::Fixed(3));
    }
}
