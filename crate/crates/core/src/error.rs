use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("zero decodable frames in {0}")]
    ZeroFrames(PathBuf),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },

    #[error("backend protocol error: {0}")]
    Protocol(String),

    #[error("could not parse `{tag}` reply after {attempts} attempt(s): {reason}")]
    BackendParse {
        tag: String,
        reason: String,
        raw: String,
        attempts: u32,
    },

    #[error("backend returned {got} item(s), expected {expected}")]
    Arity { expected: usize, got: usize },

    #[error("scripted gap: no mock entry for tag={tag} role={role} round={round} fingerprint={fingerprint}")]
    ScriptedGap {
        tag: String,
        role: String,
        round: u32,
        fingerprint: String,
    },

    #[error("mock scenario invalid: {0}")]
    Scenario(String),

    #[error("intent analysis produced no target expressions")]
    IntentFailure,

    #[error("grounding failed for target {target_id}: {reason}")]
    GroundingFailure { target_id: usize, reason: String },

    #[error("reflection questioner omitted required aspects: {0}")]
    MissingAspect(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
