//! Library side of the `cfkit` binary: run configuration, the eight-stage
//! pipeline, and the retrieval/ablation experiment harnesses. The binary in
//! `main.rs` is a thin argument-parsing layer over these.

pub mod config;
pub mod experiments;
pub mod pipeline;

/// CLI failure classes mapped to exit codes: validation errors exit with 1,
/// runtime/numeric errors with 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Runtime conversion for errors that occur after input validation.
impl From<cfkit::Error> for CliError {
    fn from(e: cfkit::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
