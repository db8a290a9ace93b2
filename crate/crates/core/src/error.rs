use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero arc length")]
    ZeroArcLength,
    #[error("streamline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("invalid affine transform: {0}")]
    InvalidAffine(String),
    #[error("resample point count must be at least 2, got {0}")]
    BadPointCount(usize),

    #[error("bad magic")]
    BadMagic,
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("NaN or infinite coordinate in streamline {streamline}, point {point}")]
    NonFiniteCoordinate { streamline: usize, point: usize },
    #[error("streamline {streamline} has point count {count} (< 2)")]
    PointCountTooSmall { streamline: usize, count: usize },
    #[error("streamline {streamline} has {count} points, more than the format allows")]
    PointCountTooLarge { streamline: usize, count: usize },
    #[error("label file: {0}")]
    LabelFormat(String),
    #[error("label count mismatch: expected {expected}, found {found}")]
    LabelCountMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("degenerate contrastive feature")]
    DegenerateFeature,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("contrastive features must be unit norm (row {row} has norm {norm})")]
    NotNormalized { row: usize, norm: f64 },
    #[error("contrastive loss needs a batch of at least 2, got {0}")]
    BatchTooSmall(usize),
    #[error("contrastive phase requires ≥2 classes")]
    SingleClass,
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint version mismatch: expected {expected}, found {found}")]
    CheckpointVersion { expected: u32, found: u32 },

    #[error("streamline {index}: {source}")]
    AtStreamline {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_streamline(index: usize, source: Error) -> Self {
        Error::AtStreamline {
            index,
            source: Box::new(source),
        }
    }

    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// The innermost error, with stage and index context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStreamline { source, .. } | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by the caller's input (bad files, bad
    /// configuration) as opposed to numerical or internal failures.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self.root(),
            Error::NonFiniteGradient | Error::DegenerateFeature | Error::Shape(_)
        )
    }
}
