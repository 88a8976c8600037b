use edca_core::{DareError, FixedPointError, LqiError, SimError, SolveError};
use thiserror::Error;

/// Top-level error with the documented process exit codes: 2 config,
/// 3 infeasible, 4 non-convergence.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Infeasible(_) => 3,
            AppError::NonConvergence(_) => 4,
            AppError::Io(_) => 1,
        }
    }
}

impl From<SolveError> for AppError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Infeasible { .. } => AppError::Infeasible(e.to_string()),
            SolveError::NonConvergence { .. } | SolveError::FixedPoint(_) => {
                AppError::NonConvergence(e.to_string())
            }
            SolveError::DomainError { .. } => AppError::Config(e.to_string()),
        }
    }
}

impl From<FixedPointError> for AppError {
    fn from(e: FixedPointError) -> Self {
        match e {
            FixedPointError::NonConvergence { .. } => AppError::NonConvergence(e.to_string()),
            FixedPointError::OutOfRange { .. } => AppError::Infeasible(e.to_string()),
        }
    }
}

impl From<DareError> for AppError {
    fn from(e: DareError) -> Self {
        match e {
            DareError::NonConvergence { .. } => AppError::NonConvergence(e.to_string()),
            _ => AppError::Config(e.to_string()),
        }
    }
}

impl From<LqiError> for AppError {
    fn from(e: LqiError) -> Self {
        match e {
            LqiError::Dare(d) => d.into(),
            LqiError::FixedPoint(f) => f.into(),
            LqiError::Uncontrollable => AppError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> Self {
        AppError::Config(e.to_string())
    }
}
