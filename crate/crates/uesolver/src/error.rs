use netcore::NetError;
use thiserror::Error;

/// Errors raised by assignment and equilibrium solving.
#[derive(Debug, Error)]
pub enum SolveError {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A positive-demand pair has no route in the network.
    #[error("no route from origin {origin} to destination {dest} with positive demand")]
    Infeasible { origin: usize, dest: usize },
    /// The objective or an iterate stopped being finite.
    #[error("numeric failure at iteration {iteration}: {msg}")]
    Numeric { iteration: usize, msg: String },
    #[error(transparent)]
    Net(#[from] NetError),
}
