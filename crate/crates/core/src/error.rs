use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants fall in two families: input/contract violations (reported by the
/// CLI with exit code 2) and numerical failures (exit code 3). See
/// [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("missing factor column `{factor}`")]
    MissingFactor { factor: String },

    #[error("non-numeric cell for factor `{factor}` in year {year}: `{raw}`")]
    NonNumeric { factor: String, year: i32, raw: String },

    #[error("missing value for factor `{factor}` in year {year}")]
    MissingValue { factor: String, year: i32 },

    #[error("gap in years: {before} is followed by {after}")]
    YearGap { before: i32, after: i32 },

    #[error("non-positive level {value} for factor `{factor}` in year {year}")]
    NonPositiveLevel { factor: String, year: i32, value: f64 },

    #[error("zero variance for `{name}`")]
    ZeroVariance { name: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument {u} outside the MGF convergence strip ({lo}, {hi})")]
    Domain { u: f64, lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("singular {0}")]
    Singular(String),

    #[error("fit did not converge after {attempts} attempts (best log-likelihood {best_loglik}): {message}")]
    FitFailed {
        attempts: usize,
        best_loglik: f64,
        best_params: Vec<f64>,
        message: String,
    },

    #[error("Esscher equation has no root in the admissible strip ({lo}, {hi}) for h = {h}")]
    EsscherNoRoot { h: f64, lo: f64, hi: f64 },

    #[error("Esscher solver failed at period {period} (h = {h}): {source}")]
    PathFailure {
        period: usize,
        h: f64,
        source: Box<Error>,
    },

    #[error("covariance stationarity violated: a + b = {persistence} >= 1")]
    NonStationary { persistence: f64 },

    #[error("empty conditioning set: {0}")]
    EmptyTail(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Whether the error is a numerical failure as opposed to a validation error.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FitFailed { .. }
                | Error::EsscherNoRoot { .. }
                | Error::PathFailure { .. }
                | Error::NonStationary { .. }
                | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
