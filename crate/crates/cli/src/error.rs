use std::path::Path;

use codemix_core::augment::AugmentError;
use codemix_core::corpus::CorpusError;
use codemix_core::embeddings::EmbeddingError;
use codemix_core::evaluate::EvaluateError;
use codemix_core::model::checkpoint::CheckpointError;
use codemix_core::model::ModelError;
use codemix_core::pipeline::PipelineError;
use codemix_core::preprocess::PreprocessError;
use codemix_core::synthetic::SyntheticError;
use codemix_core::training::TrainingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    /// Bad, missing or unreadable input or output.
    #[error("{0}")]
    Data(String),
    /// NaN or infinity during training.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(err: $t) -> Self {
                CliError::Data(err.to_string())
            }
        }
    )*};
}

data_error!(
    CorpusError,
    AugmentError,
    EmbeddingError,
    EvaluateError,
    CheckpointError,
    PreprocessError,
    SyntheticError,
    serde_json::Error
);

impl From<ModelError> for CliError {
    fn from(err: ModelError) -> Self {
        match err {
            ModelError::Config(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TrainingError> for CliError {
    fn from(err: TrainingError) -> Self {
        match err {
            TrainingError::NonFinite { .. } => CliError::Numeric(err.to_string()),
            TrainingError::Config { field, message } => CliError::Config(format!("`training.{field}` {message}")),
            TrainingError::Model(m) => m.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Training(e) => e.into(),
            PipelineError::Model(e) => e.into(),
            PipelineError::BadValidationFraction(_) => CliError::Config(format!("`split.validation_fraction`: {err}")),
            other => CliError::Data(other.to_string()),
        }
    }
}
