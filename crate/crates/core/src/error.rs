use thiserror::Error;

use crate::data::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset violates the standard MIL assumption in {} bag(s)", .0.violations.len())]
    Validation(ValidationReport),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("chi-squared kernel requires non-negative features (found {value} at index {index})")]
    NegativeFeature { index: usize, value: f64 },

    #[error("cannot split dataset: {0}")]
    ImpossibleSplit(String),

    #[error("class imbalance ratio undefined: no negative labels")]
    UndefinedRatio,

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("solver did not converge after {iterations} iterations (KKT violation {violation:.3e})")]
    NonConvergence { iterations: usize, violation: f64 },

    #[error("need at least {needed} instances, found {found}")]
    TooFewInstances { needed: usize, found: usize },

    #[error("no candidate bags left to query")]
    NoCandidates,

    #[error("bag is empty")]
    EmptyBag,

    #[error("unknown bag `{0}`")]
    UnknownBag(String),

    #[error("bag `{0}` has instances without ground-truth labels")]
    MissingLabels(String),

    #[error("dataset has no positive bags")]
    NoPositiveBags,

    #[error("no positive labels in ground truth")]
    NoPositives,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("learning curve needs at least two points")]
    DegenerateCurve,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("bag `{bag}` is not the pending query")]
    NotPending { bag: String },

    #[error("bag `{0}` has already been labeled")]
    AlreadyLabeled(String),

    #[error("labels for positive bag `{0}` are all negative, which contradicts its bag label")]
    AssumptionViolation(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}
