use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cholesky breakdown that survived the whole jitter schedule.
    #[error("factorization broke down at pivot {pivot} (value {value:e}, jitter {jitter:e})")]
    Factorization {
        pivot: usize,
        value: f64,
        jitter: f64,
    },

    #[error("posterior variance {value:e} at point {index} is negative beyond tolerance")]
    NegativeVariance { index: usize, value: f64 },

    /// The new credible interval does not overlap the running intersection.
    #[error("empty confidence interval at point {index}: [{lower}, {upper}]")]
    EmptyIntersection {
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("no kernel candidate could be evaluated")]
    NoViableCandidate,
}
