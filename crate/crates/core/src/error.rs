use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation received operands with incompatible shapes.
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// BatchNorm in training mode needs at least two rows.
    DegenerateBatch { rows: usize },
    /// An operation produced NaN or infinity.
    NonFinite { op: &'static str },
    /// A caller violated an operation contract (non-scalar loss,
    /// missing gradient, labels not one-hot, ...).
    Contract(&'static str),
    /// Invalid model/run configuration.
    Config(String),
    /// An evaluation metric is undefined for the given input.
    UndefinedMetric(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, lhs, rhs } => write!(
                f,
                "{op}: shape mismatch {}x{} vs {}x{}",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            Error::DegenerateBatch { rows } => {
                write!(f, "batchnorm: training mode needs N >= 2, got N = {rows}")
            }
            Error::NonFinite { op } => write!(f, "{op}: produced non-finite values"),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::UndefinedMetric(msg) => write!(f, "undefined metric: {msg}"),
        }
    }
}
