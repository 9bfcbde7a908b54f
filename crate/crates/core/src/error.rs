use thiserror::Error;

/// Errors produced by the embedding pipeline.
///
/// Display strings are part of the CLI contract; keep them stable.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("malformed document line {0}")]
    MalformedLine(usize),
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("unknown term {0:?}")]
    UnknownTerm(String),
    #[error("pipeline not fitted")]
    PipelineNotFitted,
    #[error("feature dimension mismatch")]
    FeatureDimensionMismatch,
    #[error("no candidate negative term")]
    NoCandidateNegative,
    #[error("validation exceeds holdout")]
    ValidationExceedsHoldout,
    #[error("corpus too small to split")]
    CorpusTooSmall,
    #[error("missing rate out of range")]
    MissingRateOutOfRange,
    #[error("cardinality exceeds topic support")]
    CardinalityExceedsSupport,
    #[error("invalid synthetic corpus configuration: {0}")]
    InvalidSynthConfig(String),
    #[error("more topics than terms")]
    MoreTopicsThanTerms,
    #[error("invalid topic model: {0}")]
    InvalidTopicModel(String),
    #[error("no in-vocabulary context")]
    NoInVocabularyContext,
    #[error("topic dimension mismatch")]
    TopicDimensionMismatch,
    #[error("invalid layer size")]
    InvalidLayerSize,
    #[error("input dimension mismatch")]
    InputDimensionMismatch,
    #[error("invalid sparsity smoothing")]
    InvalidSparsitySmoothing,
    #[error("no pretraining data")]
    NoPretrainingData,
    #[error("empty batch")]
    EmptyBatch,
    #[error("training diverged")]
    TrainingDiverged,
    #[error("cannot form pair kind")]
    CannotFormPairKind,
    #[error("invalid training configuration: {0}")]
    InvalidTrainingConfig(String),
    #[error("OOV term unseen everywhere")]
    OovUnseen,
    #[error("term {0:?} is in the training vocabulary")]
    NotOutOfVocabulary(String),
    #[error("extended priming needs ≥ 2 context terms")]
    ExtendedPrimingTooShort,
    #[error("invalid K")]
    InvalidK,
    #[error("empty ground truth")]
    EmptyTruth,
    #[error("zero matrix")]
    ZeroMatrix,
    #[error("dimension exceeds vocabulary")]
    DimensionExceedsVocabulary,
    #[error("invalid threshold")]
    InvalidThreshold,
    #[error("unsupported model version")]
    UnsupportedModelVersion,
    #[error("corrupt model file")]
    CorruptModelFile,
    #[error("inconsistent model bundle: {0}")]
    InconsistentBundle(String),
    #[error("stage prerequisite missing")]
    StagePrerequisiteMissing,
    #[error("baseline table missing: {0}")]
    BaselineMissing(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
