use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite values in {context} at t = {time}")]
    NonFinite { context: String, time: f64 },

    #[error("positivity violated: min {field} = {min:e} at t = {time}")]
    Positivity { field: &'static str, min: f64, time: f64 },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("inadmissible profile at eps = {epsilon}: {reason}")]
    InadmissibleProfile { epsilon: f64, reason: String },

    #[error("trajectory unusable: {0}")]
    Trajectory(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures raised while integrating (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Positivity { .. }
                | Error::StepTooLarge { .. }
                | Error::InadmissibleProfile { .. }
                | Error::Trajectory(_)
        )
    }
}
