use hetgat::HetGatError;
use tensorad::TensorError;
use thiserror::Error;

/// Errors surfaced by training, evaluation, and reporting.
#[derive(Debug, Error)]
pub enum TrainError {
    /// A configuration value is out of range or inconsistent.
    #[error("invalid training configuration: {0}")]
    Config(String),

    /// The dataset cannot support the requested operation.
    #[error("unusable data: {0}")]
    Data(String),

    /// The optimizer produced a non-finite loss or parameter.
    #[error("training diverged at epoch {epoch}, batch {batch}: {what}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        what: String,
    },

    #[error(transparent)]
    Model(#[from] HetGatError),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
}
