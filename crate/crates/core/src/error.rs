use alloc::string::String;
use core::fmt;

/// Failure categories shared by every operation in the crate.
///
/// The split mirrors how callers react: bad inputs are the caller's problem,
/// resource caps can be raised, and inference failures mean the data is
/// impossible under the model.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input (unknown symbol, bad weights, shape mismatch).
    Input(String),
    /// Input is well-formed but outside the operation's domain (e.g. an empty row).
    Domain(String),
    /// An enumeration would exceed a configured cap.
    Resource { what: String, cap: usize },
    /// The conditioning event has probability zero.
    Inference(String),
    /// A statistical test received data it cannot evaluate.
    Degenerate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(msg) => write!(f, "input error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Resource { what, cap } => write!(f, "resource error: {what} exceeds cap {cap}"),
            Error::Inference(msg) => write!(f, "inference error: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! input_err {
    ($($arg:tt)*) => { $crate::error::Error::Input(alloc::format!($($arg)*)) };
}
pub(crate) use input_err;
