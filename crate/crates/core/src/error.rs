use thiserror::Error;

/// Errors raised by the level-finding and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the region where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid potential model: {0}")]
    InvalidModel(String),

    /// Malformed input data (tabulated points, level lists, file syntax).
    #[error("format error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, msg: String },

    #[error("tabulated data inconsistent with declared tail: V(r_last) = {v_last}, tail gives {v_tail} (relative mismatch {rel:.3})")]
    TailInconsistency { v_last: f64, v_tail: f64, rel: f64 },

    #[error("integration failure at node {node}: {msg}")]
    Integration { node: usize, msg: String },

    /// Canonical-function ratio did not level off before the end of the domain.
    #[error("saturation failure ({direction}): no plateau before r = {r_edge} (last spread {spread:e})")]
    Saturation {
        direction: &'static str,
        r_edge: f64,
        spread: f64,
    },

    #[error("solver error for level v = {v}: {msg}")]
    Solver { v: usize, msg: String },

    #[error("fit degenerate: {0}")]
    FitDegenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
