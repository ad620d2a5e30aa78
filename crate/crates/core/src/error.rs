use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("theta - pi/2 never changes sign on the grid")]
    NoCrossing,

    #[error("theta - pi/2 changes sign {0} times, expected exactly once")]
    MultipleCrossings(usize),

    #[error("end values {left:e}, {right:e} exceed tail tolerance {tol:e} (pass sin(theta) - h, not theta)")]
    TailTooLarge { left: f64, right: f64, tol: f64 },

    #[error("step size underflow after {halvings} halvings (dt = {dt:e})")]
    StepUnderflow { dt: f64, halvings: usize },

    #[error("solver did not converge: gradient norm {grad_norm:e} after {iterations} iterations")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("decay window too noisy: plateau spread {spread:.3} exceeds {limit}")]
    WindowTooNoisy { spread: f64, limit: f64 },

    #[error("profile is not recentred: theta(0) - pi/2 = {0:e}")]
    NotRecentred(f64),

    #[error("arcsin argument {value} out of range at node {index}")]
    RangeViolation { index: usize, value: f64 },

    #[error("|theta_x(0)| = {0:e} too small for the centre formulas")]
    CenterDegenerate(f64),

    #[error("profiles are incompatible: {0}")]
    Incompatible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
