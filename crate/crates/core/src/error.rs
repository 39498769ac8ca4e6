use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("invalid parameter `{name}`: {msg}")]
    Validation { name: &'static str, msg: String },

    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },

    #[error("denominator is the zero polynomial")]
    ZeroDenominator,

    #[error("evaluation at a pole (s = {re} + {im}j)")]
    AtPole { re: f64, im: f64 },

    #[error("root finder did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("open-loop plant is unstable (pole with real part {0})")]
    UnstableOpenLoop(f64),

    #[error("no PI gains satisfy the margin constraints")]
    EmptyFeasibleSet,

    #[error("simulation diverged at t = {time} s")]
    Divergence { time: f64 },

    #[error("invalid signal: {0}")]
    Signal(String),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("frequency-response estimate: {0}")]
    Estimation(String),
}

impl Error {
    /// True for errors caused by user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::UnknownKey { .. } | Error::Validation { .. } | Error::Io { .. }
        )
    }
}
