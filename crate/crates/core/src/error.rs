use thiserror::Error;

/// Errors raised across the scenario, analysis, solver and experiment layers.
#[derive(Debug, Error)]
pub enum CovertError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value {value} outside domain {domain} in {op}")]
    Domain { op: &'static str, value: f64, domain: &'static str },

    #[error("coincident node positions give a singular path loss")]
    SingularPathLoss,

    #[error("signal power not below jamming power in band {band} (chi = {chi})")]
    SignalExceedsJamming { band: usize, chi: f64 },

    #[error("could not bracket a root in {op}: {detail}")]
    Bracket { op: &'static str, detail: String },

    #[error("quadrature failed to converge in {op}: {detail}")]
    Quadrature { op: &'static str, detail: String },

    #[error("non-finite result in {op}")]
    NonFinite { op: &'static str },

    #[error("solver {op} did not converge within {iterations} iterations")]
    MaxIterations { op: &'static str, iterations: usize },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, CovertError>;

pub(crate) fn domain(op: &'static str, value: f64, domain: &'static str) -> CovertError {
    CovertError::Domain { op, value, domain }
}
