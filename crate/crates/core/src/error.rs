//! Error taxonomy shared by the library and the command line front end.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Bad run configuration: unknown key, unparsable value, out-of-range parameter.
    #[error("config: {0}")]
    Config(String),

    /// Structural misuse of an operation (mismatched grids, wrong region, bad axis).
    #[error("domain: {0}")]
    Domain(String),

    /// Underlying I/O failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// A file exists but does not parse as the expected container.
    #[error("data format: {0}")]
    Data(String),

    /// The linear solver failed to reach its residual target.
    #[error("solver: {0}")]
    Solver(String),

    /// Boundary data incompatible with the incompressibility constraint.
    #[error("infeasible boundary data: {0}")]
    Infeasible(String),

    /// The small-data regime guard tripped (deformation too large to continue).
    #[error("regime: {0}")]
    Regime(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
