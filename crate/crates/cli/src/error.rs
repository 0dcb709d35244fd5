use cuisine_core::classifier::ClassifierError;
use cuisine_core::corpus::CorpusError;
use cuisine_core::embeddings::EmbeddingError;
use cuisine_core::layout::LayoutError;
use cuisine_core::transform::TransformError;
use cuisine_core::ArtifactError;
use cuisine_service::ServiceError;
use thiserror::Error;

/// A failure with the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or query terms unknown to the loaded artifacts.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or unsuitable input files.
    #[error("{0}")]
    Data(String),
    /// Divergence or a failed numerical check.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidRatio(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ArtifactError> for CliError {
    fn from(e: ArtifactError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        use ClassifierError::*;
        match e {
            Diverged { .. } => CliError::Numerical(e.to_string()),
            UnknownCountry(_) | UnknownIngredient(_) | InvalidConfig(_) => CliError::Usage(e.to_string()),
            Corpus(c) => c.into(),
            Artifact(a) => a.into(),
            ShapeMismatch { .. } | EmptyTrainingSet | EmptyTestSet => CliError::Data(e.to_string()),
        }
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        use EmbeddingError::*;
        match e {
            Diverged { .. } | ZeroVector(_) => CliError::Numerical(e.to_string()),
            UnknownToken(_) | UnknownCountry(_) | InvalidConfig(_) | DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            Corpus(c) => c.into(),
            Artifact(a) => a.into(),
            EmptyCorpus => CliError::Data(e.to_string()),
        }
    }
}

impl From<LayoutError> for CliError {
    fn from(e: LayoutError) -> Self {
        match e {
            LayoutError::Io { .. } | LayoutError::TooFewCountries { .. } => CliError::Data(e.to_string()),
            LayoutError::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        use TransformError::*;
        match e {
            Classifier(c) => c.into(),
            Embedding(c) => c.into(),
            VocabularyMismatch => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Model(c) => c.into(),
            ServiceError::Embeddings(c) => c.into(),
            ServiceError::Layout(c) => c.into(),
            ServiceError::Transform(c) => c.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}
