use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { condition: f64 },
    #[error("no admissible solution: {0}")]
    NoSolution(String),
    #[error("decay factors are not realizable by a CP map (Choi eigenvalue {eigenvalue:.3e})")]
    NotCpRealizable { eigenvalue: f64 },
    #[error("operator is not Clifford: image of {label} has residual {residual:.3e}")]
    NonClifford { label: String, residual: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::NoSolution(_) | Error::NotCpRealizable { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
