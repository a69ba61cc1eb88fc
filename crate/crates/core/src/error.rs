use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {matrix} at ({row}, {col})")]
    NonFinite {
        matrix: String,
        row: usize,
        col: usize,
    },

    #[error("linear algebra failure in {routine}: {detail}")]
    Linalg {
        routine: &'static str,
        detail: String,
    },

    #[error("closed loop has a pole at s = j{omega}")]
    PoleAtFrequency { omega: f64 },

    #[error("ill-posed Lyapunov equation: eigenvalues {0} and {1} sum to zero")]
    IllPosedLyapunov(Complex64, Complex64),

    #[error("no stabilizing Riccati solution at beta = {beta}: Hamiltonian has imaginary-axis eigenvalues")]
    NoStabilizingSolution { beta: f64 },

    #[error("stable invariant subspace is not a graph subspace (rcond = {rcond:e})")]
    SubspaceExtraction { rcond: f64 },

    #[error("Riccati solution is not stabilizing: {0}")]
    NotStabilizing(String),

    #[error("{equation} residual {residual:e} exceeds bound {bound:e}")]
    Residual {
        equation: &'static str,
        residual: f64,
        bound: f64,
    },

    #[error("(A, B) is not stabilizable")]
    NotStabilizable,

    #[error("(A, C) is not detectable")]
    NotDetectable,

    #[error("closed loop A + BK is not Hurwitz")]
    UnstableClosedLoop,

    #[error(
        "bisection did not converge after {iterations} iterations; bracket [{lower}, {upper}]"
    )]
    NonConvergence {
        lower: f64,
        upper: f64,
        iterations: usize,
    },

    #[error("line search exhausted (last step {step:e}, alpha {alpha:e})")]
    LineSearchExhausted { step: f64, alpha: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
}

impl Error {
    /// Stable machine-readable category, used for CLI exit codes and reports.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::NonFinite { .. } => "non_finite",
            Error::Linalg { .. } => "linalg",
            Error::PoleAtFrequency { .. } => "pole_at_frequency",
            Error::IllPosedLyapunov(..) => "ill_posed_lyapunov",
            Error::NoStabilizingSolution { .. } => "no_stabilizing_solution",
            Error::SubspaceExtraction { .. } => "subspace_extraction",
            Error::NotStabilizing(_) => "not_stabilizing",
            Error::Residual { .. } => "residual",
            Error::NotStabilizable => "not_stabilizable",
            Error::NotDetectable => "not_detectable",
            Error::UnstableClosedLoop => "unstable_closed_loop",
            Error::NonConvergence { .. } => "non_convergence",
            Error::LineSearchExhausted { .. } => "line_search_exhausted",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn linalg(routine: &'static str, err: impl std::fmt::Display) -> Self {
        Error::Linalg {
            routine,
            detail: err.to_string(),
        }
    }
}
