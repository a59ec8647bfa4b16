//! Error categories mapped to process exit codes.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Numeric,
    Io,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Numeric => 3,
            Category::Io => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Numeric => "numeric",
            Category::Io => "io",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { category: Category::Config, message: msg.into() }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Self { category: Category::Numeric, message: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self { category: Category::Io, message: msg.into() }
    }

    pub fn from_numeric(e: impl fmt::Display) -> Self {
        Self::numeric(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.category.label(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<eqvt_flow::FlowError> for CliError {
    fn from(e: eqvt_flow::FlowError) -> Self {
        CliError::numeric(e.to_string())
    }
}

impl From<eqvt_noise::NoiseError> for CliError {
    fn from(e: eqvt_noise::NoiseError) -> Self {
        CliError::numeric(e.to_string())
    }
}

impl From<eqvt_metrics::MetricError> for CliError {
    fn from(e: eqvt_metrics::MetricError) -> Self {
        CliError::numeric(e.to_string())
    }
}

impl From<eqvt_diffusion::ToyError> for CliError {
    fn from(e: eqvt_diffusion::ToyError) -> Self {
        CliError::numeric(e.to_string())
    }
}
