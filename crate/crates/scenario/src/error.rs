use netcore::NetError;
use thiserror::Error;
use uesolver::SolveError;

/// Errors raised while perturbing scenarios, generating topologies, or
/// persisting datasets.
#[derive(Debug, Error)]
pub enum ScenarioError {
    /// An argument violates its stated range or precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Random generation could not satisfy a structural requirement within
    /// its retry budget.
    #[error("generation failed: {0}")]
    Generation(String),

    /// The equilibrium solver failed while labeling one sample.
    #[error("solver failed on sample {sample}: {source}")]
    Solve {
        sample: usize,
        #[source]
        source: SolveError,
    },

    /// The dataset file declares a schema this build does not speak.
    #[error("dataset schema version {found} is not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },

    /// A dataset line is not valid under the record format.
    #[error("dataset parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The file content contradicts its own manifest.
    #[error("dataset integrity: {0}")]
    Integrity(String),

    /// A reconstructed network or demand matrix failed validation.
    #[error(transparent)]
    Net(#[from] NetError),

    /// Reading or writing a dataset file failed.
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
}
