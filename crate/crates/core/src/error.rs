use thiserror::Error;

/// Errors produced by design construction, evaluation and optimization.
#[derive(Debug, Error)]
pub enum DesignError {
    /// A growth-curve definition violates its family constraints.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A numeric input is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// No estimable design exists for the requested problem.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// A certificate was requested for a design with singular information.
    #[error("certificate unavailable: {0}")]
    Certificate(String),

    /// A computation would exceed the configured size budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A numerical routine detected an internally inconsistent result.
    #[error("numerical diagnostic: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, DesignError>;
