use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element index {index} out of range (mesh has {count} triangles)")]
    ElementOutOfRange { index: usize, count: usize },

    #[error("assembly failed on element {element}: {reason}")]
    Assembly { element: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular matrix (pivot {pivot})")]
    SingularMatrix { pivot: usize },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("coefficient matrix not invertible at ({x}, {y})")]
    SingularCoefficient { x: f64, y: f64 },

    #[error("history state error: {0}")]
    History(String),

    #[error("({t}, {s}) is not on the resolvent lattice")]
    OffLattice { t: f64, s: f64 },

    #[error("non-finite state at step {step}")]
    Divergence { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("study inconclusive: {0}")]
    Inconclusive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
