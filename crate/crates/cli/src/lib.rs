//! Plumbing for the `talab` command-line tool: configuration files, run
//! directories with provenance manifests, the gradient-check battery, and
//! one module per subcommand.
//!
//! The binary in `main.rs` only parses arguments and dispatches here, so
//! integration tests can drive the same code paths in process.

pub mod checks;
pub mod commands;
pub mod config_file;
pub mod output;

pub use checks::{model_loss_checks, primitive_checks, run_all_checks, CheckReport};
pub use commands::gradcheck::GRADCHECK_BOUND;
pub use config_file::FlatConfig;
pub use output::{fingerprint, out_root, RunDir, MANIFEST_FILE, OUT_ENV};
