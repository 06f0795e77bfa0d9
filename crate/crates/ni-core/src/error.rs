//! Crate-wide error type.

/// Errors reported by the analysis routines.
///
/// Numerical *refutations* (a property that tests false) are not errors; they are
/// carried in the report structs. Errors mark inputs outside an operation's domain
/// (dimension mismatches, poles where a frequency sweep cannot run) or genuine
/// numerical failure (singular Jacobians, iteration limits).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (defect {defect:.3e} exceeds tolerance)")]
    NotSymmetric { defect: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("state matrix A is singular; the system has a pole at the origin")]
    SingularA,

    #[error("grid point omega = {omega:.6e} lies within {distance:.3e} of a pole")]
    PoleOnGrid { omega: f64, distance: f64 },

    #[error(
        "pole on the imaginary axis at omega = {omega:.6e}; \
         residue-based classification is out of scope"
    )]
    ImaginaryAxisPole { omega: f64 },

    #[error("state matrix is not Hurwitz (eigenvalue with real part {real_part:.3e})")]
    NotHurwitz { real_part: f64 },

    #[error("supplied certificate is invalid: {0}")]
    CertificateInvalid(String),

    #[error("no storage certificate found within the iteration budget")]
    CertificateNotFound,

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value encountered at t = {t:.6}")]
    NonFinite { t: f64 },

    #[error("Newton iteration hit a singular Jacobian")]
    SingularJacobian,

    #[error("iteration limit {limit} reached (residual {residual:.3e})")]
    MaxIterations { limit: usize, residual: f64 },

    #[error("cascade condition 1 violated: output gradient times g is {value:.3e}")]
    Cond1Violated { value: f64 },

    #[error("assumption {index} failed: {evidence}")]
    AssumptionFailed { index: usize, evidence: String },

    #[error("parameter {name} must be positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
