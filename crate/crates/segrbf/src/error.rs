//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("points {a} and {b} coincide; sites must be pairwise distinct")]
    DuplicatePoints { a: usize, b: usize },

    #[error("point {id} has a non-finite coordinate")]
    NonFinitePoint { id: usize },

    #[error("point set must contain at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("neighbor count k={k} must be between {min} and the set size {n}")]
    BadNeighborCount { k: usize, min: usize, n: usize },

    #[error("domain box is empty: min exceeds max on axis {axis}")]
    EmptyDomain { axis: usize },

    #[error("probe step must be positive and finite, got {0}")]
    BadProbeStep(f64),

    #[error("grid step must be positive and at most 1, got {0}")]
    BadGridStep(f64),

    #[error("shape parameter delta must be positive and finite, got {0}")]
    BadShapeParameter(f64),

    #[error("kernel argument r must be nonnegative, got {0}")]
    NegativeRadius(f64),

    #[error("kernel matrix is numerically rank deficient: first failing pivot {pivot:.3e} at center {index}")]
    RankDeficient { pivot: f64, index: usize },

    #[error("locality fit failed at point {id}: {source}")]
    LocalityFit { id: usize, source: Box<Error> },

    #[error(
        "no component of size >= {min_size} survived; retry with a different \
         threshold factor or a smaller minimum component size"
    )]
    NoComponentSurvived { min_size: usize },

    #[error(
        "target separation {target_q} is infeasible for N={n} and margin={margin}; \
         the feasible target is at most {feasible:.4}"
    )]
    InfeasibleSeparation {
        target_q: f64,
        n: usize,
        margin: f64,
        feasible: f64,
    },

    #[error("N={0} must be a perfect square with at least 2 points per side")]
    BadSiteCount(usize),

    #[error("unknown phase '{0}' (expected sigma, seeds, classes, or blowup-trace)")]
    UnknownPhase(String),

    #[error("unknown benchmark case '{0}' (expected f1, f2, f3, or f4)")]
    UnknownCase(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv input: {0}")]
    CsvInput(String),

    #[error("phase {phase} failed: {source}")]
    Phase { phase: &'static str, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for configuration/input problems, 3 for numeric
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::CsvInput(_)
            | Error::UnknownPhase(_)
            | Error::UnknownCase(_)
            | Error::BadSiteCount(_)
            | Error::BadGridStep(_)
            | Error::BadShapeParameter(_)
            | Error::BadProbeStep(_)
            | Error::BadNeighborCount { .. }
            | Error::DuplicatePoints { .. }
            | Error::NonFinitePoint { .. }
            | Error::TooFewPoints { .. }
            | Error::EmptyDomain { .. }
            | Error::InfeasibleSeparation { .. } => 2,
            Error::RankDeficient { .. }
            | Error::NegativeRadius(_)
            | Error::LocalityFit { .. }
            | Error::NoComponentSurvived { .. } => 3,
            Error::Phase { source, .. } => source.exit_code(),
            Error::Io(_) => 1,
        }
    }
}
