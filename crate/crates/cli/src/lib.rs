//! Pipeline orchestration for the `onsager` binary: stage configuration,
//! the on-disk result cache and artifact rendering.

pub mod cache;
pub mod stages;

pub use cache::{Cache, CacheEntry, Lookup, CODE_VERSION};
pub use stages::{run_stage, Format, JobConfig, Params, Stage, StageOutput};

use onsager_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const RESOURCE: i32 = 3;
    pub const MISMATCH: i32 = 4;
    pub const CONVERGENCE: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: exit::USAGE, message: message.into() }
    }

    pub fn resource(message: impl Into<String>) -> Self {
        CliError { code: exit::RESOURCE, message: message.into() }
    }

    pub fn mismatch(message: impl Into<String>) -> Self {
        CliError { code: exit::MISMATCH, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { code: exit::INTERNAL, message: message.into() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Usage(_) | CoreError::Domain(_) => exit::USAGE,
            CoreError::Resource(_) => exit::RESOURCE,
            CoreError::Inconsistent { .. } | CoreError::Verification(_) => exit::MISMATCH,
            CoreError::Convergence { .. } => exit::CONVERGENCE,
            CoreError::Internal(_) => exit::INTERNAL,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    // an unusable cache directory is an environment limit, not a usage slip
    fn from(e: std::io::Error) -> Self {
        CliError::resource(format!("cache i/o: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
