//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// A physical or numeric argument is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A requested computation has no feasible solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A data table failed to load or violates its invariants.
    #[error("table error: {0}")]
    Table(String),

    /// Scenario file could not be parsed.
    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    /// Scenario parsed but violates invariants. Every violation is listed.
    #[error("config validation failed:\n  {}", .0.join("\n  "))]
    ConfigValidation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
