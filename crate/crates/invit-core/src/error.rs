//! Error type shared by all modules of the crate.

use alloc::boxed::Box;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands live on spaces of different dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// A vector must have at least one coordinate.
    EmptyVector,
    /// A vector coordinate is NaN or infinite.
    NonFiniteEntry { index: usize },
    /// The operation requires a nonzero vector.
    ZeroVector,
    /// Symmetric factorization hit a nonpositive pivot: the form is not
    /// positive definite.
    NotPositiveDefinite { pivot: usize },
    /// Matrix data is not square or entries do not match the declared size.
    BadShape,
    /// Duplicate coordinate entry while assembling a sparse form.
    DuplicateEntry { row: usize, col: usize },
    /// The operation needs spectral metadata that the problem does not carry.
    MissingMetadata,
    /// An eigenbasis vector fails the residual bound against its problem.
    MetadataResidual { index: usize, relative: f64 },
    /// The stored eigenbasis is not mass-orthonormal to tolerance.
    MetadataGram { max_deviation: f64 },
    /// Spectral metadata must satisfy 0 < lambda1 < lambda2.
    BadSpectralBounds { lambda1: f64, lambda2: f64 },
    /// Prescribed eigenvalue list contains a nonpositive value.
    NonPositiveEigenvalue { value: f64 },
    /// All prescribed eigenvalues coincide, so no spectral gap exists.
    GapUndefined,
    /// The computed spectral gap is below the floor where certificates
    /// become numerically vacuous.
    GapTooSmall { gap: f64, floor: f64 },
    /// Grid parameter below the minimum for the generator.
    GridTooSmall { n: usize, min: usize },
    /// Problem dimension exceeds the desk-scale cap of the dense oracle.
    ProblemTooLarge { dim: usize, max: usize },
    /// `gap_fraction` must lie strictly inside (0, 1).
    GapFractionOutOfRange { value: f64 },
    /// The accuracy parameter must satisfy 0 <= eta < 1.
    EtaOutOfRange { value: f64 },
    /// The iterate is not normalized in the mass norm.
    Unnormalized { mass_norm: f64 },
    /// Rayleigh quotient of the iterate is not below lambda2.
    PreconditionViolated { lambda: f64, lambda2: f64 },
    /// The exact correction vanishes: the iterate is already an eigenvector
    /// and the caller must treat the step as converged.
    EigenvectorFixedPoint,
    /// Truncated CG exhausted its iteration budget before certification.
    CgNotCertified { best_eta: f64, iterations: usize },
    /// Linear-solve residual exceeded its tolerance even after refinement.
    SolveResidualTooLarge { relative: f64 },
    /// The tridiagonal eigensolver failed to converge.
    EigenSolverFailed { iterations: usize },
    /// Bound evaluator called outside its lambda range.
    LambdaOutOfRange { lambda: f64, lo: f64, hi: f64 },
    /// A squared norm argument was negative.
    NegativeNormSq { value: f64 },
    /// A Rayleigh quotient increased beyond roundoff slack; this signals an
    /// implementation bug or a violated precondition, never valid dynamics.
    MonotonicityViolated { lambda: f64, lambda_next: f64 },
    /// Configuration rejected before running.
    BadConfig(&'static str),
    /// An error raised inside step `step` of an iteration run.
    AtStep { step: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::EmptyVector => write!(f, "vector must have at least one coordinate"),
            Error::NonFiniteEntry { index } => {
                write!(f, "non-finite coordinate at index {index}")
            }
            Error::ZeroVector => write!(f, "operation requires a nonzero vector"),
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "form is not positive definite (pivot {pivot})")
            }
            Error::BadShape => write!(f, "matrix data does not match the declared shape"),
            Error::DuplicateEntry { row, col } => {
                write!(f, "duplicate sparse entry at ({row}, {col})")
            }
            Error::MissingMetadata => write!(f, "problem carries no spectral metadata"),
            Error::MetadataResidual { index, relative } => write!(
                f,
                "eigenbasis vector {index} has relative residual {relative:e}"
            ),
            Error::MetadataGram { max_deviation } => write!(
                f,
                "eigenbasis is not mass-orthonormal (max deviation {max_deviation:e})"
            ),
            Error::BadSpectralBounds { lambda1, lambda2 } => write!(
                f,
                "spectral bounds must satisfy 0 < lambda1 < lambda2, got ({lambda1}, {lambda2})"
            ),
            Error::NonPositiveEigenvalue { value } => {
                write!(f, "prescribed eigenvalue {value} is not positive")
            }
            Error::GapUndefined => {
                write!(f, "all eigenvalues coincide; lambda2 is undefined")
            }
            Error::GapTooSmall { gap, floor } => {
                write!(f, "spectral gap {gap:e} below floor {floor:e}")
            }
            Error::GridTooSmall { n, min } => {
                write!(f, "grid size {n} below minimum {min}")
            }
            Error::ProblemTooLarge { dim, max } => {
                write!(f, "dimension {dim} exceeds the desk-scale cap {max}")
            }
            Error::GapFractionOutOfRange { value } => {
                write!(f, "gap_fraction {value} outside (0, 1)")
            }
            Error::EtaOutOfRange { value } => {
                write!(f, "eta {value} outside [0, 1)")
            }
            Error::Unnormalized { mass_norm } => {
                write!(f, "iterate has mass norm {mass_norm}, expected 1")
            }
            Error::PreconditionViolated { lambda, lambda2 } => write!(
                f,
                "Rayleigh quotient {lambda} not below lambda2 = {lambda2}"
            ),
            Error::EigenvectorFixedPoint => {
                write!(f, "iterate is an eigenvector; correction vanishes")
            }
            Error::CgNotCertified {
                best_eta,
                iterations,
            } => write!(
                f,
                "CG not certified after {iterations} iterations (best eta {best_eta:e})"
            ),
            Error::SolveResidualTooLarge { relative } => {
                write!(f, "solve residual {relative:e} exceeds tolerance")
            }
            Error::EigenSolverFailed { iterations } => {
                write!(f, "eigensolver did not converge within {iterations} sweeps")
            }
            Error::LambdaOutOfRange { lambda, lo, hi } => {
                write!(f, "lambda {lambda} outside [{lo}, {hi}]")
            }
            Error::NegativeNormSq { value } => {
                write!(f, "squared norm {value} is negative")
            }
            Error::MonotonicityViolated {
                lambda,
                lambda_next,
            } => write!(
                f,
                "Rayleigh quotient increased: {lambda} -> {lambda_next}"
            ),
            Error::BadConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::AtStep { step, source } => write!(f, "step {step}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtStep { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
