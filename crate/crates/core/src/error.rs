use thiserror::Error;

use crate::data::DataError;
use crate::glm::GlmError;

/// Errors raised by estimation, integration and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Glm(#[from] GlmError),

    #[error("numerical integration did not reach tolerance: achieved error {achieved:.3e} after {evaluations} evaluations")]
    Integration { achieved: f64, evaluations: usize },

    #[error("degenerate mediator correlation (|rho| = {0:.6})")]
    DegenerateCorrelation(f64),

    #[error("positivity violation: estimated P(X = {level} | C) = {probability:.3e} at row {row}")]
    Positivity {
        level: u8,
        probability: f64,
        row: usize,
    },

    #[error("degenerate IORW weights: {0}")]
    DegenerateWeights(String),

    #[error("{method} requires exactly {expected} mediators, found {found}")]
    MediatorCount {
        method: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} does not support a mediator-mediator interaction")]
    UnsupportedInteraction(&'static str),

    #[error("too many rejected quasi-Bayes draws: {rejected} rejected for {requested} requested")]
    RejectedDraws { rejected: usize, requested: usize },

    #[error("too many failed bootstrap resamples: {failed} of {total}")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario {0}")]
    UnknownScenario(u32),

    #[error("duplicate results for scenario {scenario}, method {method}, effect {effect}")]
    DuplicateResults {
        scenario: u32,
        method: String,
        effect: String,
    },

    #[error("outcome prevalence {prevalence:.4} for scenario {id} lies outside [0.25, 0.4]")]
    Prevalence { id: u32, prevalence: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error payload.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Data(_) => "data",
            Error::Glm(_) => "model_fit",
            Error::Integration { .. } => "integration",
            Error::DegenerateCorrelation(_) => "degenerate_correlation",
            Error::Positivity { .. } => "positivity",
            Error::DegenerateWeights(_) => "degenerate_weights",
            Error::MediatorCount { .. } => "mediator_count",
            Error::UnsupportedInteraction(_) => "unsupported_interaction",
            Error::RejectedDraws { .. } => "rejected_draws",
            Error::BootstrapFailures { .. } => "bootstrap_failures",
            Error::Config(_) => "config",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::DuplicateResults { .. } => "duplicate_results",
            Error::Prevalence { .. } => "prevalence",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
