use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("score vector is all zeros{}", group_suffix(*.group))]
    ZeroScoreVector { group: Option<usize> },

    #[error("score at index {index} is not finite ({value})")]
    NonFiniteScore { index: usize, value: f64 },

    #[error("score vector is empty")]
    EmptyScoreVector,

    #[error("beta must be a positive finite number, got {0}")]
    NonPositiveBeta(f64),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid simplex point: {0}")]
    InvalidSimplexPoint(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("point is not on the affine hyperplane (coordinate sum {0})")]
    NotOnHyperplane(f64),

    #[error("no sample landed in the level set A_{nu} for n = {n} within the budget")]
    InfeasibleRegion { n: usize, nu: usize },

    #[error("loss bound needs the squared parameter displacement")]
    MissingDeltaTheta,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    DivergenceDetected { epoch: usize, loss: f64 },

    #[error("trace estimate is not finite")]
    NonFiniteEstimate,

    #[error("unsupported image: {0}")]
    UnsupportedImage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("png decode error in {path}: {source}")]
    PngDecode {
        path: PathBuf,
        #[source]
        source: png::DecodingError,
    },

    #[error("png encode error: {0}")]
    PngEncode(#[from] png::EncodingError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn group_suffix(group: Option<usize>) -> String {
    match group {
        Some(g) => format!(" (group {g})"),
        None => String::new(),
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
