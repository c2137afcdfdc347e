//! Heterogeneous graph attention surrogate for user equilibrium.
//!
//! The model predicts link flow-capacity ratios directly from a road
//! network and a (possibly partial) travel demand matrix, skipping the
//! iterative equilibrium solve. The network and demand are encoded as a
//! heterogeneous graph: road links connect nodes physically, demand
//! entries connect them virtually. Stacked attention encoders first let
//! origins exchange information with their destinations along virtual
//! edges, then propagate it over the road topology, with link attributes
//! steering the attention weights. A linear head reads each link's
//! endpoint embeddings and attributes and emits the ratio; flows follow
//! by scaling with capacity.
//!
//! Everything runs on the [`tensorad`] tape, so the full pipeline from
//! node features to the training loss is differentiable end to end. A
//! flattened fully connected baseline ([`FcnnParams`]) shares the scalar
//! type, loss, and checkpoint format so the two can be compared under
//! identical training loops.
//!
//! The building blocks compose in the order they are listed:
//!
//! 1. [`FeatureScale::fit`] learns attribute normalization from a corpus
//!    of networks.
//! 2. [`build_hetero_graph`] turns one network plus observed demand into
//!    node features and typed edge lists.
//! 3. [`HetGatParams::init`] or [`FcnnParams::init`] create parameters.
//! 4. [`stage`] puts them on a tape; [`forward`] predicts; [`total_loss`]
//!    scores the prediction against an equilibrium label.
//! 5. [`save_model`] and [`load_model`] persist the result exactly.

pub mod checkpoint;
pub mod config;
mod error;
pub mod graph;
pub mod loss;
pub mod model;
pub mod params;

pub use checkpoint::{
    decode_model, encode_model, load_model, model_from_text, model_to_text, save_model,
    SavedModel,
};
pub use config::{LossWeights, ModelConfig};
pub use error::HetGatError;
pub use graph::{build_hetero_graph, build_node_features, FeatureScale, HeteroGraph};
pub use loss::{
    conservation_loss, demand_imbalance, supervised_loss, total_loss, ConservationLoss,
    SupervisedLoss, TotalLoss,
};
pub use model::{forward, predict, Prediction, TapePrediction};
pub use params::{
    stage, Affine, EncoderLayerParams, FcnnParams, HeadParams, HetGatParams, ModelParams,
    ModelVars, FCNN_DEPTH,
};

/// Single precision graph for memory-constrained experiments.
pub type HeteroGraph32 = HeteroGraph<f32>;
/// Single precision parameters.
pub type ModelParams32 = ModelParams<f32>;
