use thiserror::Error;

/// Unified error type for the whole crate.
///
/// `is_validation()` distinguishes bad inputs/config from I/O trouble so
/// callers (e.g. the CLI) can map errors to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed corpus line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("duplicate recipe_id {0:?}")]
    DuplicateRecipe(String),

    #[error("duplicate image_id {image:?} within recipe {recipe:?}")]
    DuplicateImage { recipe: String, image: String },

    #[error("image {0:?} has no embedding")]
    MissingEmbedding(String),

    #[error("unknown image id {0:?}")]
    UnknownImage(String),

    #[error("vector length mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("non-finite component in vector for image {0:?}")]
    NonFinite(String),

    #[error("{0}")]
    EmptyInput(&'static str),

    #[error("no eligible candidates when sampling for center {center:?}")]
    NoCandidates { center: String },

    #[error("ring statistics need at least 2 neighbors, got {0}")]
    RingTooSmall(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset task {dataset:?} does not match {expected:?}")]
    TaskMismatch { dataset: String, expected: String },

    #[error("probe training diverged (non-finite loss) at learning_rate={lr}")]
    Diverged { lr: f64 },

    #[error("embedding file: {0}")]
    BadEmbeddingFile(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by invalid inputs or configuration (as opposed
    /// to I/O failures).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
