use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GntError {
    /// An operation was applied outside its domain, e.g. lowering a zero entry.
    #[error("domain error: {0}")]
    Domain(String),
    /// Shapes of the inputs do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A brute-force oracle was asked for more work than its configured cap.
    #[error("refused: {what} = {requested} exceeds the cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },
    /// Input that does not parse.
    #[error("parse error: {0}")]
    Parse(String),
    /// A geometry is too coarse or otherwise unfit for the requested check.
    #[error("refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, GntError>;
