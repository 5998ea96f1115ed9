//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("image is {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter {name} = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("stacked state must hold at least one vector")]
    EmptyStackedState,

    #[error("stacked state vectors differ in length: {expected} vs {got}")]
    RaggedStackedState { expected: usize, got: usize },

    #[error("{agents} agents supplied for a stacked state of {state} vectors")]
    AgentCountMismatch { agents: usize, state: usize },

    #[error("agent {agent} returned {got} values for an input of {expected}")]
    AgentOutputLength {
        agent: String,
        expected: usize,
        got: usize,
    },

    #[error("agent {agent} produced a non-finite value at iteration {iteration}")]
    NonFiniteAgentOutput { agent: String, iteration: usize },

    #[error("agent {agent} failed at iteration {iteration}: {source}")]
    AgentFailure {
        agent: String,
        iteration: usize,
        source: Box<Error>,
    },

    #[error("window block index {index} out of range for dimension {dim}")]
    BlockIndexOutOfRange { index: usize, dim: usize },

    #[error("window block is not symmetric (max deviation {max_deviation:.3e})")]
    AsymmetricBlock { max_deviation: f64 },

    #[error("conjugate gradient stopped after {iterations} iterations with residual {residual:.3e}")]
    CgDidNotConverge { iterations: usize, residual: f64 },

    #[error("system is not positive definite (curvature {curvature:.3e})")]
    NotPositiveDefinite { curvature: f64 },

    #[error("window covariance is numerically singular (det {det:.3e})")]
    SingularWindow { det: f64 },

    #[error("total-variation solver stopped after {iterations} iterations with relative gap {residual:.3e}")]
    TvDidNotConverge { iterations: usize, residual: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    ImageDecode {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    ImageEncode {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("{path}: unsupported raster format (expected .png or .pgm)")]
    UnsupportedFormat { path: PathBuf },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config line {line}: unknown key {key:?}")]
    UnknownConfigKey { key: String, line: usize },

    #[error("frame {index} ({path}): {source}")]
    Frame {
        index: usize,
        path: PathBuf,
        source: Box<Error>,
    },

    #[error("batch contains no frames")]
    EmptyBatch,

    #[error("temporal mode needs at least {need} frames, got {got}")]
    TooFewFrames { got: usize, need: usize },

    #[error("temporal mode needs a single shared plate, found {found:?} and {expected:?}")]
    MixedPlates { expected: PathBuf, found: PathBuf },
}
