use thiserror::Error;

/// Errors raised by the library. Audits never produce these; they report residuals as data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("empty Dirichlet set")]
    EmptyDirichlet,

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("non-conforming mesh: {0}")]
    NonConforming(String),

    #[error("edge index {index} out of range for mesh with {edges} edges")]
    EdgeOutOfRange { index: usize, edges: usize },

    #[error("crack sets live on different meshes")]
    MeshMismatch,

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("competitor enumeration overflow: {count} competitors exceed the cap of {cap}")]
    CompetitorOverflow { count: u128, cap: usize },

    #[error("jump lattice has {gap} free edges, more than the cap of {cap}; restrict the lattice")]
    LatticeCapExceeded { gap: usize, cap: usize },

    #[error("extension path is not incident to a crack tip")]
    NotAtTip,

    #[error("stress intensity fit: {0}")]
    SifFit(String),

    #[error("structural hypothesis violated at step {step}: {reason}")]
    OffPath { step: usize, reason: String },

    #[error("local stability probe unsupported: {0}")]
    UnsupportedProbe(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("archive error: {0}")]
    Archive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Validation problems (bad input) as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SolverNonConvergence { .. } | Error::SifFit(_) | Error::CompetitorOverflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
