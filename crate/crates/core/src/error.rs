use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sponge parameters: {0}")]
    SpongeParams(String),

    #[error("requested output length must be positive")]
    ZeroOutputLength,

    #[error("key must be {expected} bytes for this variant, got {actual}")]
    KeyLength { expected: usize, actual: usize },

    #[error("key must be 32, 48 or 64 hex characters, got {0}")]
    KeyHexLength(usize),

    #[error("key is not valid lowercase hex: {0}")]
    KeyHex(String),

    #[error("key file {path} line {line}: {reason}")]
    KeyFile { path: String, line: usize, reason: String },

    #[error("schedule for {variant} needs {expected} round keys, got {actual}")]
    ScheduleLength { variant: &'static str, expected: usize, actual: usize },

    #[error("profile {0} is not served by this provider")]
    WrongProvider(&'static str),

    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),

    #[error("malformed padding")]
    MalformedPadding,

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("sample has {actual} bits, at least {required} are needed")]
    UndersizedSample { required: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no benchmark records to emit")]
    EmptyRecords,

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub(crate) fn io_path(action: &str, path: &std::path::Path, source: io::Error) -> Self {
        Error::Io { context: format!("{action} {}", PathBuf::from(path).display()), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
