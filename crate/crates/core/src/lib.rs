//! Concept-automaton extraction from recurrent sequence classifiers.
//!
//! The crate turns traces of a recurrent model (inputs, hidden states and
//! per-timestep predictions) into a small automaton whose states are named
//! clusters of the hidden space ("concepts") and whose transitions are
//! per-concept classifiers over the (windowed) input. Everything here is
//! pure computation over in-memory data; file formats and the command line
//! live in the `meme` crate.
//!
//! Pipeline overview:
//!
//! 1. [`concepts::kmeans`] clusters hidden states, [`concepts::name_concepts`]
//!    names each cluster by its majority label.
//! 2. [`transitions::build_transition_table`] groups `(c[t-1], x[t], c[t])`
//!    triples per source concept and trains one classifier per concept.
//! 3. [`automaton::ExtractedModel`] replays input sequences through the
//!    concepts and emits the label of every visited concept.
//!
//! [`pipeline::extract_pipeline`] wires the three steps together.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod automaton;
pub mod concepts;
pub mod data;
pub mod error;
pub mod eval;
pub mod explain;
pub mod matrix;
pub mod mlp;
pub mod pipeline;
mod rng;
pub mod rnn;
pub mod synthetic;
pub mod transitions;
pub mod tree;

pub use automaton::{classify_batch, classify_sequence, EmitOrder, ExtractedModel, StepRecord};
pub use concepts::{ConceptId, ConceptSet, Clustering};
pub use data::{FeatureKind, FeatureSchema, Label, LabelSource, SplitTag, TraceDataset, TracedSequence};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use pipeline::{extract_pipeline, PipelineConfig};
pub use transitions::{ClassifierKind, TrainConfig, TransitionClassifier, TransitionTable};

/// Name given to clusters whose majority-label ratio does not exceed theta.
pub const UNCERTAIN: &str = "uncertain";

/// Default purity threshold for naming concepts.
pub const DEFAULT_THETA: f64 = 0.8;

/// Version of every on-disk format produced from these types.
pub const FORMAT_VERSION: u32 = 1;
