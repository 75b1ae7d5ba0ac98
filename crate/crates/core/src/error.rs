use thiserror::Error;

use crate::measures::MeasureReport;
use crate::optimize::MaxResult;

/// Everything that can go wrong while building states or evaluating measures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is out of range (maximum {max})")]
    Bounds {
        what: &'static str,
        value: f64,
        max: f64,
    },

    #[error("truncation {given} leaves a coherent tail above 1e-12; at least N = {required} is required")]
    Truncation { required: usize, given: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state is not normalized (sum of |c|^2 = {0})")]
    Normalization(f64),

    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("arity mismatch: expected {expected} mode(s), got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("quadrature configuration error: {0}")]
    Quadrature(String),

    #[error("invalid optimizer configuration: {0}")]
    Config(String),

    #[error("lattice scan of {evals:.3e} evaluations exceeds the budget of {limit:.0e}")]
    Budget { evals: f64, limit: f64 },

    #[error("optimizer did not converge on any start (best q_max = {})", best.q_max)]
    NotConverged { best: Box<MaxResult> },

    #[error("nonclassical degree did not converge (best-so-far D = {})", report.degree)]
    DegreeNotConverged { report: Box<MeasureReport> },

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
