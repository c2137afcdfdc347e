use thiserror::Error;

/// Errors raised by parsing, validation, and the link cost functions.
#[derive(Debug, Error)]
pub enum NetError {
    /// A line of a TNTP file could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// The parsed pieces do not form a valid network.
    #[error("structural error: {0}")]
    Structure(String),
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The file contradicts its own declared metadata.
    #[error("integrity error: {0}")]
    Integrity(String),
}
