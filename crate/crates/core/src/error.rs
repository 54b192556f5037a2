//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by lattice construction, model operations, samplers and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The face set is empty.
    #[error("domain has no faces")]
    EmptyDomain,
    /// The face set is disconnected or its complement is.
    #[error("domain is not simply connected")]
    NotSimplyConnected,
    /// A loop configuration has a vertex of degree 1 or 3.
    #[error("vertex {vertex} has degree {degree}")]
    InvalidDegree { vertex: usize, degree: usize },
    /// The two spins disagree on a common edge.
    #[error("spin pair is inconsistent")]
    InconsistentPair,
    /// No height function has the given spin representation.
    #[error("spin pair has no height representative")]
    NotRepresentable,
    /// Both diagonals disagree at an interior vertex.
    #[error("ice rule violated at vertex {0}")]
    IceRuleViolated(usize),
    /// Spins and percolation do not fit together.
    #[error("incompatible input: {0}")]
    IncompatibleInput(String),
    /// A domain wall runs along an edge touching the boundary.
    #[error("domain wall on a boundary edge")]
    WallOnBoundary,
    /// Exhaustive enumeration would exceed the state budget.
    #[error("state space exceeds budget {budget}")]
    TooLarge { budget: u64 },
    /// p8 is only defined for even step counts.
    #[error("odd step count {0}")]
    OddStepCount(usize),
    /// Empirical and exact distributions use different encodings.
    #[error("state encodings differ")]
    EncodingMismatch,
    /// Too few samples for the estimator.
    #[error("insufficient samples: {0}")]
    InsufficientSamples(usize),
    /// Too few distinct sizes for a fit.
    #[error("insufficient points: {0}")]
    InsufficientPoints(usize),
    /// The rhombus does not fit inside the domain.
    #[error("rhombus of size {0} is not inside the domain")]
    RhombusOutOfDomain(usize),
    /// The annulus does not fit inside the domain.
    #[error("annulus is not inside the domain")]
    AnnulusOutOfDomain,
    /// A parameter is outside its admissible range.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// The requested operation is not available for these parameters.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
