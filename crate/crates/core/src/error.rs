use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid wavelet name {name:?}: bad token {token:?} ({reason})")]
    WaveletName {
        name: String,
        token: String,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("incompatible spectra: {field} differs ({detail})")]
    Incompatible { field: &'static str, detail: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("integrity error: {} missing date(s): {}", missing.len(), fmt_dates(missing))]
    Integrity { missing: Vec<NaiveDate> },

    #[error("no data: {0}")]
    Empty(String),

    #[error("parse error in {source_name} at row {row}: {message}")]
    Parse {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::WaveletName { .. } | Error::Config(_) => ErrorKind::Usage,
            Error::Domain(_) | Error::Numerical(_) => ErrorKind::Numerical,
            Error::Input(_)
            | Error::Incompatible { .. }
            | Error::Transport { .. }
            | Error::Integrity { .. }
            | Error::Empty(_)
            | Error::Parse { .. }
            | Error::Io { .. } => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn fmt_dates(dates: &[NaiveDate]) -> String {
    dates
        .iter()
        .map(|d| d.format("%Y-%m-%d").to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
