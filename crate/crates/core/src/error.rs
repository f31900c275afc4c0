use thiserror::Error;

/// Errors raised by the numerical and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument {value} outside domain ({reason})")]
    Domain {
        func: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: String,
        reason: String,
    },

    #[error("integrand returned a non-finite value at {at}")]
    NonFinite { at: f64 },

    #[error("asymptotic regime invalid for K = {k}: {reason}")]
    AsymptoticRegime { k: u32, reason: &'static str },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },

    #[error("at {param} = {value}: {source}")]
    AtSweepPoint {
        param: &'static str,
        value: f64,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(func: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            func,
            value,
            reason,
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            reason: err.to_string(),
        }
    }

    pub(crate) fn param(name: &'static str, value: impl ToString, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
