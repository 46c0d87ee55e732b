use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the CLI and the C ABI to pick an exit code.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ErrorClass {
    /// Bad user input: malformed architecture documents, impossible shapes,
    /// unknown identifiers, out-of-range parameters. Exit code 2.
    Validation,
    /// Unreadable or corrupt data files (tensors, weights, registries).
    /// Exit code 3.
    DataFile,
    /// Broken internal invariant; always a bug. Exit code 4.
    Internal,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Validation => 2,
            ErrorClass::DataFile => 3,
            ErrorClass::Internal => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("architecture document: {0}")]
    Schema(String),

    #[error("layer {layer:?}: {message}")]
    Layer { layer: String, message: String },

    #[error("shape inference at layer {layer:?}: {message}")]
    Shape { layer: String, message: String },

    #[error("unknown layer id {0:?}")]
    UnknownLayer(String),

    #[error("unknown protocol {0}")]
    UnknownProtocol(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("{}: {message} (byte {offset})", path.display())]
    FileFormat {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Schema(_)
            | Error::Layer { .. }
            | Error::Shape { .. }
            | Error::UnknownLayer(_)
            | Error::UnknownProtocol(_)
            | Error::InvalidArgument(_) => ErrorClass::Validation,
            Error::FileFormat { .. } | Error::Io { .. } => ErrorClass::DataFile,
            Error::Internal(_) => ErrorClass::Internal,
        }
    }

    pub fn layer(layer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Layer {
            layer: layer.into(),
            message: message.into(),
        }
    }

    pub fn shape(layer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Shape {
            layer: layer.into(),
            message: message.into(),
        }
    }
}
