use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("non-positive or non-finite time {time} at row {row}")]
    NonPositiveTime { row: usize, time: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("c + Y vanishes on ({start}, {end}) where the hazard has positive mass")]
    DegenerateWeight { start: f64, end: f64 },

    #[error("tail estimator has a zero denominator (top {k} observations tied with the threshold)")]
    ZeroDenominator { k: usize },

    #[error("no events among the top {k} observations")]
    NoTailEvents { k: usize },

    #[error("all tail weights are zero for k = {k}")]
    AllWeightsZero { k: usize },

    #[error("degenerate QQ regression: {0}")]
    DegenerateRegression(String),

    #[error("hazard jump {mass} at t = {time} exceeds one")]
    JumpExceedsOne { time: f64, mass: f64 },

    #[error("invalid beta parameters at t = {time}: b = {tuning}, dN = {events}")]
    AtomValidity { time: f64, tuning: f64, events: f64 },

    #[error("thinning ratio {ratio} outside [0, 1] at x = {x}, b = {b}")]
    ThinningRatio { x: f64, b: f64, ratio: f64 },

    #[error("rejection sampler exceeded {0} iterations")]
    IterationCap(u64),

    #[error("credible band needs at least {needed} paths, got {got}")]
    TooFewPaths { needed: usize, got: usize },

    #[error("path {index}: {source}")]
    Path {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures caused by malformed input data rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::UnknownColumn(_)
                | Error::NonPositiveTime { .. }
                | Error::EmptySample
        )
    }
}
