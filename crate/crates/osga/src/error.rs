use std::fmt;

/// Errors produced by dictionary construction, factorization, and fitting.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector had a different length than the structure it was used with.
    DimensionMismatch { expected: usize, got: usize },
    /// An upper-triangular factor had a zero diagonal entry and cannot be
    /// back-substituted.
    SingularFactor { column: usize },
    /// An atom evaluated to (numerically) zero at every sample point and
    /// cannot be normalized.  The payload is the atom index.
    ZeroNormAtom(usize),
    /// An operation that needs at least two atoms (e.g. coherence) was given
    /// fewer.
    TooFewAtoms { count: usize },
    /// Atom selection was asked to choose from an empty candidate set.
    EmptyCandidateSet,
    /// The configured step size exceeds what the dictionary's coherence
    /// admits.
    CoherenceGateViolation { step_size: usize, max_admissible: usize },
    /// A per-iteration quantity was requested for an iteration that was never
    /// run.
    IterationOutOfRange { requested: usize, available: usize },
    /// A target function was evaluated outside its domain.
    DomainError { value: f64 },
    /// A linear system was numerically singular and could not be solved.
    SingularSystem,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::SingularFactor { column } => {
                write!(f, "upper-triangular factor is singular at column {column}")
            }
            Error::ZeroNormAtom(index) => {
                write!(f, "atom {index} has zero empirical norm on the sample")
            }
            Error::TooFewAtoms { count } => {
                write!(f, "operation needs at least two atoms, got {count}")
            }
            Error::EmptyCandidateSet => write!(f, "no candidate atoms left to select from"),
            Error::CoherenceGateViolation {
                step_size,
                max_admissible,
            } => write!(
                f,
                "step size {step_size} exceeds the coherence-admissible maximum {max_admissible}"
            ),
            Error::IterationOutOfRange {
                requested,
                available,
            } => write!(
                f,
                "iteration {requested} out of range: fit has {available} iterations"
            ),
            Error::DomainError { value } => {
                write!(f, "input {value} is outside the target function's domain")
            }
            Error::SingularSystem => write!(f, "linear system is numerically singular"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
