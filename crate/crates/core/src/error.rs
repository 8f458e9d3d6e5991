use std::fmt;

use thiserror::Error;

/// Grid dimensions in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_pow2(&self) -> bool {
        self.rows.is_power_of_two() && self.cols.is_power_of_two()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: Shape, got: Shape },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("detector layout: {0}")]
    Layout(String),

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("format error at line {line}: {message}")]
    Line { line: u64, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("instrument error: {0}")]
    Instrument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }

    /// Process exit status for this error: 3 for instrument-side failures,
    /// 2 for everything a user can fix in the configuration or inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Instrument(_) | Error::Protocol(_) => 3,
            _ => 2,
        }
    }

    /// Prefix instrument-side failures with the training round they occurred in.
    pub(crate) fn in_round(self, round: usize) -> Self {
        match self {
            Error::Instrument(m) => Error::Instrument(format!("round {round}: {m}")),
            Error::Protocol(m) => Error::Protocol(format!("round {round}: {m}")),
            Error::Io(e) => Error::Instrument(format!("round {round}: {e}")),
            other => other,
        }
    }

    pub(crate) fn check_shape(expected: Shape, got: Shape) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got })
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
