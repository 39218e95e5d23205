use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("degenerate cone: {0}")]
    DegenerateCone(String),

    #[error("cone is not full-dimensional: {dim} generators in ambient dimension {ambient}")]
    NotFullDimensional { dim: usize, ambient: usize },

    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    #[error(
        "numerical instability: {degenerate} degenerate trials while drawing {requested} samples"
    )]
    NumericalInstability { degenerate: u64, requested: u64 },

    #[error("general position violation: {found} sign patterns exceed the bound {bound}")]
    GeneralPositionViolation {
        found: usize,
        bound: usize,
        /// Vertices of the offending simplex, kept for inspection.
        vertices: Vec<Vec<f64>>,
    },
}

impl Error {
    /// Process exit code for the command-line runner.
    ///
    /// 1 for usage problems, 2 for degenerate input, 3 when a numerical
    /// degeneracy is detected while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch(_) | Error::InvalidInput(_) => 1,
            Error::NotPositiveDefinite { .. }
            | Error::Singular
            | Error::DegenerateCone(_)
            | Error::NotFullDimensional { .. } => 2,
            Error::DegenerateProjection(_)
            | Error::NumericalInstability { .. }
            | Error::GeneralPositionViolation { .. } => 3,
        }
    }
}
