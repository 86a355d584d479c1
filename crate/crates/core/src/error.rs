use thiserror::Error;

use crate::quadrature::IntegralResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the domain: {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(
        "evaluation budget exhausted after {} evaluations (best estimate {:.12e}, error estimate {:.3e})",
        .best.evaluations, .best.value, .best.error_estimate
    )]
    BudgetExhausted { best: IntegralResult },

    #[error("ill-conditioned coefficient fit: {0}")]
    IllConditioned(String),

    #[error("series terms do not decay: {0}")]
    NonDecaying(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}
