//! Training and evaluation for the flow surrogate models.
//!
//! The crate turns generated datasets into trained models and honest
//! numbers about them: minibatch Adam training with per-epoch validation,
//! pooled error metrics, k-fold cross-validation, and the two recipes for
//! datasets whose graphs differ in size (freezing pretrained encoders, or
//! padding every sample with isolated dummy nodes). Reports render as CSV
//! tables and a predicted-versus-true scatter plot in SVG.

mod config;
mod error;
mod metrics;
mod prepare;
mod report;
mod train;

pub use config::{ModelKind, Strategy, TrainConfig};
pub use error::TrainError;
pub use metrics::{evaluate_metrics, evaluate_prepared, conservation_residual_sum, Metrics};
pub use prepare::{homogenize_all, homogenize_sample, prepare_samples, PreparedSample};
pub use report::{
    history_csv, metrics_csv, scatter_svg, write_history_csv, write_metrics_csv,
    write_scatter_svg, MetricsRow, HISTORY_HEADER, METRICS_HEADER,
};
pub use train::{
    kfold_cv, train, train_on_splits, transfer_retrain, EpochRecord, FoldSummary, History,
};
