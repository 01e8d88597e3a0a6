use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Process exit statuses, one per failure family.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const MISSING_ARTIFACT: i32 = 4;
    pub const SCHEMA: i32 = 5;
    pub const VALIDATION: i32 = 6;
    pub const IO: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing artifact {}; run `pfkit {stage}` first", path.display())]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error(transparent)]
    Core(#[from] pfkit::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::Core(pfkit::Error::Config(_)) => "config",
            CliError::MissingArtifact { .. } => "missing_artifact",
            CliError::Core(pfkit::Error::Parse { .. } | pfkit::Error::Json(_)) => "schema",
            CliError::Core(pfkit::Error::Validation(_)) => "validation",
            CliError::Core(pfkit::Error::Io { .. }) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => exit::CONFIG,
            "missing_artifact" => exit::MISSING_ARTIFACT,
            "schema" => exit::SCHEMA,
            "validation" => exit::VALIDATION,
            _ => exit::IO,
        }
    }

    /// One-line JSON record for standard error.
    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            level: &'static str,
            kind: &'a str,
            code: i32,
            message: String,
        }
        serde_json::to_string(&Line {
            level: "error",
            kind: self.kind(),
            code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("plain record serializes")
    }
}
