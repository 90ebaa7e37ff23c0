use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("order out of range: {0}")]
    OrderOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Newton iteration for the {n}-point Gauss-Legendre rule did not converge")]
    QuadratureNotConverged { n: usize },

    #[error("KKT system is rank deficient (numerical rank {rank} of {size})")]
    RankDeficient { rank: usize, size: usize },

    #[error("no sign change of the moment residual on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("observation {index} is not finite")]
    NonFiniteObservation { index: usize },

    #[error("observation {index} = {value} is not positive")]
    NonPositiveObservation { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("derivative of order {order} is not available for a {kernel} kernel")]
    UnsupportedDerivative { order: usize, kernel: &'static str },

    #[error("degenerate moment J_beta = {0}")]
    DegenerateMoment(f64),

    #[error("unknown target density `{0}`")]
    UnknownTarget(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the input data rather than the configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyDataset
                | Error::NonFiniteObservation { .. }
                | Error::NonPositiveObservation { .. }
                | Error::DimensionMismatch { .. }
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
