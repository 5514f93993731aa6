use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite tensor coordinate {0}")]
    NonFinite(f64),

    #[error("tensor is not physical: smallest eigenvalue {lambda1} is at or below -1/3")]
    NotPhysical { lambda1: f64 },

    #[error("eigenvalue margin {margin:e} is below the hard floor {floor:e}")]
    BoundaryProximity { margin: f64, floor: f64 },

    #[error("sphere quadrature did not converge at {nodes} nodes (last two log-partition iterates {previous} and {last})")]
    QuadratureNonConvergence { nodes: usize, previous: f64, last: f64 },

    #[error("dual Newton stagnated after {iterations} iterations (moment residual {residual:e})")]
    DualStagnation { iterations: usize, residual: f64 },

    #[error("proximal solve did not converge after {iterations} iterations (gradient norm {residual:e})")]
    ProxNonConvergence { iterations: usize, residual: f64 },

    #[error("inner minimization did not converge after {iterations} iterations")]
    InnerNonConvergence { iterations: usize, history: Vec<f64> },

    #[error("step stalled at t = {t} after {retries} backtracking retries (last tau {tau:e})")]
    StepStall { t: f64, retries: usize, tau: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
