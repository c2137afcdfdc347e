//! Dataset generation for learned equilibrium prediction.
//!
//! A scenario starts from a base network and demand matrix and produces
//! supervised samples: capacities scaled by a disruption level, demand
//! scaled per entry and normalized to a common total, the equilibrium
//! solved for ground-truth flows, and optionally a fraction of demand
//! entries masked to emulate partial observation. Each sample owns a seed
//! derived from the master seed, so datasets are reproducible and the
//! masked variant of a dataset shares its solutions with the unmasked one.
//!
//! Synthetic grid networks and topology perturbations support transfer
//! experiments, and the JSON-lines serialization round-trips every float
//! exactly.

mod config;
mod dataset;
mod error;
mod io;
mod perturb;
mod synth;

pub use config::{DisruptionLevel, ScenarioConfig};
pub use dataset::{
    dataset_stats, generate_dataset, normalize_problem, Dataset, DatasetStats, Manifest,
    Sample, SampleMeta, SAMPLE_DEMAND_TOTAL, SCHEMA_VERSION,
};
pub use error::ScenarioError;
pub use io::{dataset_from_str, dataset_to_string, load_dataset, save_dataset};
pub use perturb::{mask_od, scale_capacities, scale_od};
pub use synth::{gen_grid_random_network, gen_random_od, perturb_topology};

/// Single-precision aliases.
pub type Dataset32 = Dataset<f32>;
pub type Sample32 = Sample<f32>;
