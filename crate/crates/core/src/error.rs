use thiserror::Error;

use crate::morphisms::LinearFit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("invalid word {input:?}: {reason}")]
    InvalidWord { input: String, reason: String },

    #[error("invalid boundary ray {input:?}: {reason}")]
    InvalidRay { input: String, reason: String },

    #[error("declared inverse does not invert the automorphism on generator {generator}")]
    InverseMismatch { generator: char },

    #[error("acting automorphisms {first} and {second} do not commute on generator {generator}")]
    NotCommuting {
        first: usize,
        second: usize,
        generator: char,
    },

    #[error("acting group mismatch: {0}")]
    KindMismatch(String),

    #[error("invalid step measure: {0}")]
    InvalidMeasure(String),

    #[error("malformed sublattice: {0}")]
    MalformedSublattice(String),

    #[error(
        "growth classification inconclusive: polynomial R^2 = {:.4}, exponential R^2 = {:.4}",
        polynomial.r_squared,
        exponential.r_squared
    )]
    Inconclusive {
        polynomial: LinearFit,
        exponential: LinearFit,
    },

    #[error("work budget exceeded: {0}")]
    Budget(String),

    #[error(
        "truncation overflow: only {available} of {depth} letters survived cancellation; use a larger margin"
    )]
    TruncationOverflow { depth: usize, available: usize },

    #[error("convergence failure: unresolved fraction {fraction:.4} exceeds ceiling {ceiling:.4}")]
    ConvergenceFailure { fraction: f64, ceiling: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tree: {0}")]
    Tree(String),

    #[error("liminf did not stabilize within a horizon of {horizon} terms")]
    LiminfInconclusive { horizon: usize },
}
