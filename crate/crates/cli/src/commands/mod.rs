//! One module per subcommand. Each exposes a single `run` entry point
//! taking the parsed configuration, the output root, and its own flags.

pub mod eval;
pub mod gen_data;
pub mod gradcheck;
pub mod plot;
pub mod solve;
pub mod train;
pub mod verify;
