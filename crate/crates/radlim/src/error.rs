//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("field: {0}")]
    Field(String),

    #[error("boundary data: {0}")]
    Boundary(String),

    #[error("parameters: {0}")]
    Params(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("Newton iteration failed to converge: {0}")]
    NewtonDiverged(String),

    #[error("linear solver failed to converge: {0}")]
    LinearSolver(String),

    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
