use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),

    #[error("self loop at node {0}")]
    SelfLoop(usize),

    #[error("node subset is invalid: {0}")]
    InvalidSubset(String),

    #[error("graph has {n} nodes but at least {needed} are required")]
    TooFewNodes { n: usize, needed: usize },

    #[error("edge density {0} is 0 or 1; there is nothing to test")]
    DegenerateDensity(f64),

    #[error("node {0} has zero degree; remove isolated nodes first")]
    ZeroDegree(usize),

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (best estimate {estimate}, residual {residual:e})"
    )]
    NoConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("bootstrap replicates have zero spread; the subgraph cannot be tested")]
    DegenerateBootstrap,

    #[error("bootstrap replicate kept drawing an empty or complete graph")]
    DegenerateReplicate,

    #[error("n = {n} exceeds the dense eigensolver ceiling of {ceiling}; raise the ceiling or subsample")]
    TooLargeForDense { n: usize, ceiling: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("partitions do not share a node universe: {0}")]
    UniverseMismatch(String),

    #[error("empty node set")]
    EmptySet,

    #[error("invalid cluster tree: {0}")]
    InvalidTree(String),

    #[error("unknown recipe {0:?}")]
    UnknownRecipe(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

/// Coarse failure classes, used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Degenerate,
    Solver,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::TooFewNodes { .. }
            | Error::DegenerateDensity(_)
            | Error::ZeroDegree(_)
            | Error::DegenerateBootstrap
            | Error::DegenerateReplicate => ErrorClass::Degenerate,
            Error::NoConvergence { .. } | Error::TooLargeForDense { .. } => ErrorClass::Solver,
            _ => ErrorClass::Input,
        }
    }
}
