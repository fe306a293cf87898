//! Error type shared by the whole crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A square matrix was required.
    NonSquare { rows: usize, cols: usize },
    /// Operand dimensions do not match.
    DimensionMismatch(String),
    /// The requested filter would be improper (numerator order above denominator).
    ImproperFilter { num_order: usize, den_order: usize },
    /// Invalid numeric parameter (non-positive bandwidth, step size, ...).
    InvalidParameter(String),
    /// The pair is not observable; rank of the observability matrix is reported.
    Unobservable { rank: usize, n: usize },
    /// Desired poles are not closed under conjugation.
    PolesNotSelfConjugate,
    /// No finite relative degree: C A^j B = 0 for all j < n.
    NoRelativeDegree,
    /// rank(C A^{r-1} B) < rank(B); the gain equations are unsolvable.
    RankCondition,
    /// (C, M) is not detectable.
    Undetectable,
    /// The designed or iterated F is not Hurwitz.
    NonHurwitz { abscissa: f64 },
    /// The star-condition fixed point did not converge.
    StarConditionFailed { residual: f64, iterations: usize },
    /// Wrong number of output-derivative samples supplied.
    DerivativeCount { expected: usize, got: usize },
    /// A state became non-finite during integration.
    NonFiniteState { t: f64 },
    /// Trajectory norm exceeded the divergence bound.
    Divergence { t: f64, norm: f64 },
    /// Riccati solution lost positive definiteness.
    RiccatiNotPositive { t: f64, min_eig: f64 },
    /// One or more plant assumptions are violated.
    AssumptionViolation(Vec<String>),
    /// Degenerate amplitude regressor (estimated frequency is zero).
    ZeroFrequency,
    /// Scenario/configuration problem.
    Config(String),
    /// I/O error (path and message).
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonSquare { rows, cols } => {
                write!(f, "expected a square matrix, got {rows}x{cols}")
            }
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::ImproperFilter {
                num_order,
                den_order,
            } => write!(
                f,
                "improper filter: numerator order {num_order} exceeds denominator order {den_order}"
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Unobservable { rank, n } => {
                write!(f, "pair not observable: observability rank {rank} < {n}")
            }
            Error::PolesNotSelfConjugate => {
                write!(f, "desired poles are not closed under complex conjugation")
            }
            Error::NoRelativeDegree => write!(f, "no finite relative degree: C A^j B = 0 for all j"),
            Error::RankCondition => {
                write!(f, "rank(C A^(r-1) B) < rank(B): unknown-input gain equations unsolvable")
            }
            Error::Undetectable => write!(f, "(C, M) is not a detectable pair"),
            Error::NonHurwitz { abscissa } => {
                write!(f, "matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")
            }
            Error::StarConditionFailed {
                residual,
                iterations,
            } => write!(
                f,
                "star-condition iteration failed: residual {residual:.3e} after {iterations} iterations"
            ),
            Error::DerivativeCount { expected, got } => {
                write!(f, "expected {expected} output derivatives, got {got}")
            }
            Error::NonFiniteState { t } => write!(f, "non-finite state at t = {t:.6}"),
            Error::Divergence { t, norm } => {
                write!(f, "trajectory diverged at t = {t:.6} (norm {norm:.3e})")
            }
            Error::RiccatiNotPositive { t, min_eig } => write!(
                f,
                "Riccati solution lost positive definiteness at t = {t:.6} (min eigenvalue {min_eig:.3e})"
            ),
            Error::AssumptionViolation(list) => {
                write!(f, "plant assumptions violated: {}", list.join("; "))
            }
            Error::ZeroFrequency => write!(f, "estimated frequency is zero: amplitude regressor degenerate"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
