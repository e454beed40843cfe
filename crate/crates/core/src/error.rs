use std::io;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A GeoJSON or raster document could not be interpreted. `index` names
    /// the offending feature when the problem is local to one feature.
    #[error("parse error{}: {message}", .index.map(|i| format!(" in feature {i}")).unwrap_or_default())]
    Parse { index: Option<usize>, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("outside projection domain: {0}")]
    Domain(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("raster format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn arg(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }

    pub(crate) fn parse(index: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            index,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
