use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("dynamically unstable: {which} = {value:e} must be positive")]
    Unstable { which: &'static str, value: f64 },
    #[error("undefined: {0}")]
    Singular(&'static str),
    #[error("rejected input: {0}")]
    Rejected(String),
    #[error("no convergence after {iterations} iterations, residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("fixed-point iteration stalled, last iterates {last:e} and {previous:e}")]
    FixedPoint { last: f64, previous: f64 },
    #[error("no stable feasible point found")]
    Infeasible,
}

pub type Result<T> = std::result::Result<T, Error>;
