use thiserror::Error;

/// Errors raised by tensor construction, tape operations, the optimizer,
/// and checkpoint serialization.
#[derive(Debug, Error)]
pub enum TensorError {
    /// Operand shapes are incompatible for the named operation.
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    /// An operation that requires a 1x1 tensor received something larger.
    #[error("{op} expects a scalar tensor, got {rows}x{cols}")]
    NotScalar {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    /// A variable handle or element index does not refer to anything.
    #[error("invalid index in {op}: {detail}")]
    Index { op: &'static str, detail: String },

    /// A checkpoint file does not follow the expected text format.
    #[error("checkpoint error at line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },

    /// A metadata key or tensor name is empty, repeated, or contains
    /// whitespace the line-oriented checkpoint format cannot carry.
    #[error("invalid checkpoint entry: {0}")]
    CheckpointEntry(String),

    /// Reading or writing a checkpoint file failed.
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}
