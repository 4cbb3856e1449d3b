//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical quantity is outside its valid domain.
    #[error("{name} = {value} outside valid domain ({requirement})")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// Invalid simulation or protocol configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Monte Carlo run produced too few escape events for a rate estimate.
    #[error("only {escapes} escapes observed, need at least {required}")]
    InsufficientEscapes { escapes: usize, required: usize },

    /// The integrator detected energy growth in an undriven, noiseless run.
    #[error("integrator instability: energy grew by {growth:.3e} at tau = {time:.3}")]
    Instability { growth: f64, time: f64 },

    /// Escape rate too high for the protocol sampler at this bias.
    #[error("escape rate {rate_hz:.3e} Hz exceeds sampler limit ({limit:.1e} per cycle)")]
    RateOverflow { rate_hz: f64, limit: f64 },

    /// Histogram cannot support the requested fit.
    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),

    /// The RF arrival time does not land on a histogram bin edge in span.
    #[error("rf time {t_rf:.6e} s not aligned with histogram bins")]
    MisalignedRf { t_rf: f64 },

    /// Too few points or too little dynamic range for a fit.
    #[error("insufficient data span: {0}")]
    InsufficientSpan(String),

    /// Optimizer failed to converge.
    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// A fit result cannot be used for the requested derived quantity.
    #[error("invalid fit: {0}")]
    InvalidFit(String),

    /// Dataset contains no usable records.
    #[error("empty dataset")]
    EmptyDataset,

    /// Dataset file could not be parsed.
    #[error("dataset format error: {0}")]
    DatasetFormat(String),

    /// Langevin cell budget for a map command was exceeded.
    #[error("simulation budget exceeded: {requested} trajectories requested, budget {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 numerical, 4 budget, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain { .. } | Error::Config(_) | Error::DatasetFormat(_) => 2,
            Error::InsufficientEscapes { .. }
            | Error::Instability { .. }
            | Error::RateOverflow { .. }
            | Error::DegenerateHistogram(_)
            | Error::MisalignedRf { .. }
            | Error::InsufficientSpan(_)
            | Error::NonConvergence { .. }
            | Error::InvalidFit(_)
            | Error::EmptyDataset => 3,
            Error::BudgetExceeded { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}
