use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported degree {0}")]
    UnsupportedDegree(usize),
    #[error("coefficient vector of length {found} does not match degree {degree}")]
    BadLength { degree: usize, found: usize },
    #[error("points spanning the line are linearly dependent")]
    DependentPoints,
    #[error("form is identically zero")]
    ZeroForm,

    #[error("linear system is singular (sigma_min / sigma_max = {condition:e})")]
    SingularSystem { condition: f64 },
    #[error("no solution: relative residual {residual:e}")]
    NoSolution { residual: f64 },
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("quartic is not smooth (grid minimum {min_value:e})")]
    NotSmooth { min_value: f64 },
    #[error("found {found} verified bitangents instead of 28")]
    CountMismatch { found: usize },
    #[error("line is not a bitangent (relative residual {residual:e})")]
    NotABitangent { residual: f64 },
    #[error("five or more bitangents meet in a common point")]
    FiveConcurrent,

    #[error("bitangent pairs overlap")]
    OverlappingPairs,
    #[error("steiner partition failed: {0}")]
    PartitionFailure(String),
    #[error("steiner complexes share {0} bitangents")]
    InconsistentIntersection(usize),
    #[error("bitangent products span a {0}-dimensional space instead of 3")]
    SpanNotThree(usize),
    #[error("steiner graph has unexpected shape: {0}")]
    GraphShape(String),

    #[error("form is not strictly sos (best margin {margin:e})")]
    Infeasible { margin: f64 },
    #[error("interior point solver stopped after {iterations} iterations (residual {residual:e})")]
    NumericalFailure { iterations: usize, residual: f64 },
    #[error("tensor does not map to the form (relative residual {residual:e})")]
    NotFeasible { residual: f64 },
    #[error("one-dimensional face detectors disagree: {0}")]
    DetectorDisagreement(String),
    #[error("slice tensors are affinely dependent")]
    AffinelyDependent,

    #[error("{0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotSmooth { .. } | Error::Infeasible { .. } | Error::ZeroForm => 2,
            Error::Parse(_) | Error::Io(_) => 1,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
