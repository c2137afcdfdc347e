use tensorad::TensorError;
use thiserror::Error;

/// Errors from model construction, forward evaluation, and checkpointing.
#[derive(Debug, Error)]
pub enum HetGatError {
    /// Invalid model configuration (head count, layer count, weights).
    #[error("config error: {0}")]
    Config(String),

    /// Inputs whose dimensions disagree with the parameters.
    #[error("shape error: {0}")]
    Shape(String),

    /// Checkpoint contents that do not describe a loadable model.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Tensor(#[from] TensorError),
}
