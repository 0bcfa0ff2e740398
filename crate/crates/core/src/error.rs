use thiserror::Error;

use crate::thresholds::ThresholdName;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or argument is outside its admissible domain.
    #[error("{name} must be {requirement} (got {value})")]
    Domain {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    /// The exchange-rate law has zero volatility where a density or an
    /// inverse map was requested.
    #[error("degenerate distribution: {0}")]
    Degenerate(&'static str),

    #[error("empty request: {0}")]
    Empty(&'static str),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("no sign change for {which} on [{lo}, {hi}]")]
    BoundaryNotFound {
        which: ThresholdName,
        lo: f64,
        hi: f64,
    },

    #[error("quadrature reached {achieved:e}, requested {requested:e}")]
    Accuracy { achieved: f64, requested: f64 },

    /// Alternating grid best responses revisited a state without settling.
    #[error("grid best responses cycle through {} states", states.len())]
    Cycle { states: Vec<[f64; 3]> },
}

pub(crate) fn domain(name: &'static str, requirement: &'static str, value: f64) -> Error {
    Error::Domain {
        name,
        requirement,
        value,
    }
}
