use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix does not have full row rank (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("matrix does not have full column rank (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    ColumnRankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("{what} is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { what: &'static str, min_eig: f64 },

    #[error("{what} is not negative semidefinite (max eigenvalue {max_eig:e})")]
    NotNegativeSemidefinite { what: &'static str, max_eig: f64 },

    #[error("{what} is not symmetric (max deviation {deviation:e})")]
    Asymmetric { what: &'static str, deviation: f64 },

    #[error("G is not a right inverse of the regressor (||XG - I||_F = {residual:e})")]
    NotRightInverse { residual: f64 },

    #[error("ill-posed feedback interconnection: cond(I - D*delta) = {condition:e}")]
    IllPosed { condition: f64 },

    #[error("system is not asymptotically stable (spectral radius {spectral_radius})")]
    Unstable { spectral_radius: f64 },

    #[error("Lyapunov solve residual {residual:e} exceeds tolerance")]
    LyapunovResidual { residual: f64 },

    #[error("not enough samples: need N >= {min}, got N = {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("negative multiplier entry tau[{index}] = {value}")]
    NegativeMultiplier { index: usize, value: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("solver backend error: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
