use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and I/O helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CovError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty matrix or sequence")]
    Empty,

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})"
    )]
    EigNoConvergence { sweeps: usize, residual: f64 },

    #[error("negative eigenvalue {value:e} below tolerance -{tol:e}; input is not a covariance")]
    NegativeEigenvalue { value: f64, tol: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("model covariance is singular (smallest eigenvalue {min_eig:e})")]
    SingularModel { min_eig: f64 },

    #[error("data covariance is singular (smallest eigenvalue {min_eig:e})")]
    SingularData { min_eig: f64 },

    #[error("perturbation too large: ||eps * T^-1/2 D T^-1/2||_F = {norm} >= 1")]
    PerturbationTooLarge { norm: f64 },

    #[error("matrix is not Toeplitz (defect {defect:e})")]
    NotToeplitz { defect: f64 },

    #[error("initial point is not strictly feasible: {0}")]
    InitInfeasible(String),

    #[error("degenerate signal: reflection denominator {denominator:e} at order {order}")]
    DegenerateSignal { order: usize, denominator: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CovError {
    fn from(e: std::io::Error) -> Self {
        CovError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CovError>;
