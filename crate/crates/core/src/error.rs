use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No refracted ray exists going water to air.
    #[error(
        "total internal reflection at incidence {alpha:.6} rad (critical angle {critical:.6} rad)"
    )]
    TotalInternalReflection { alpha: f64, critical: f64 },

    #[error("beam lost: {0}")]
    BeamLost(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("sweep cell {cell} failed: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for the errors the tracker treats as "no light on the array".
    pub fn is_beam_lost(&self) -> bool {
        matches!(
            self,
            Error::BeamLost(_) | Error::TotalInternalReflection { .. }
        )
    }
}
