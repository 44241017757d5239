use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("sequences carry no confidence scores")]
    MissingScores,
    #[error("missing {0} labels")]
    MissingLabels(&'static str),
    #[error("only one class present; cannot balance")]
    SingleClass,
    #[error("label {0} is not a binary class label")]
    InvalidLabel(u8),
    #[error("input width {actual} does not match expected width {expected}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("cannot take a majority over an empty cluster")]
    EmptyCluster,
    #[error("k-means needs at least k={k} points, got {points}")]
    DegenerateInput { points: usize, k: usize },
    #[error("window {window} requires sequences longer than {window}, shortest has {length}")]
    WindowTooLarge { window: usize, length: usize },
    #[error("sequence of length {length} is too short for window {window}")]
    SequenceTooShort { length: usize, window: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("training diverged (loss became non-finite)")]
    Diverged,
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
