use std::path::Path;

use netcore::Scalar;
use tensorad::Checkpoint;

use crate::config::{LossWeights, ModelConfig};
use crate::error::HetGatError;
use crate::graph::FeatureScale;
use crate::params::{FcnnParams, HetGatParams, ModelParams};

/// Everything needed to reconstruct a trained model: its parameters, the
/// architecture they were built for, and the feature scaling fitted on
/// the training data.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel<T: Scalar = f64> {
    pub params: ModelParams<T>,
    pub config: ModelConfig,
    pub scale: FeatureScale<T>,
}

fn meta_value<'a, T: Scalar>(
    checkpoint: &'a Checkpoint<T>,
    key: &str,
) -> Result<&'a str, HetGatError> {
    checkpoint
        .meta(key)
        .ok_or_else(|| HetGatError::Checkpoint(format!("missing metadata key {key}")))
}

fn meta_usize<T: Scalar>(checkpoint: &Checkpoint<T>, key: &str) -> Result<usize, HetGatError> {
    let raw = meta_value(checkpoint, key)?;
    raw.parse()
        .map_err(|_| HetGatError::Checkpoint(format!("metadata key {key} is not a count: {raw}")))
}

fn meta_bool<T: Scalar>(checkpoint: &Checkpoint<T>, key: &str) -> Result<bool, HetGatError> {
    let raw = meta_value(checkpoint, key)?;
    raw.parse()
        .map_err(|_| HetGatError::Checkpoint(format!("metadata key {key} is not a flag: {raw}")))
}

fn meta_f64<T: Scalar>(checkpoint: &Checkpoint<T>, key: &str) -> Result<f64, HetGatError> {
    let raw = meta_value(checkpoint, key)?;
    raw.parse()
        .map_err(|_| HetGatError::Checkpoint(format!("metadata key {key} is not a number: {raw}")))
}

fn meta_scalar<T: Scalar>(checkpoint: &Checkpoint<T>, key: &str) -> Result<T, HetGatError> {
    let value = meta_f64(checkpoint, key)?;
    T::from(value)
        .ok_or_else(|| HetGatError::Checkpoint(format!("metadata key {key} overflows the scalar")))
}

/// Encode a model as a checkpoint: architecture and feature scaling in
/// the metadata, every parameter tensor under its stable name.
pub fn encode_model<T: Scalar>(model: &SavedModel<T>) -> Result<Checkpoint<T>, HetGatError> {
    let mut checkpoint = Checkpoint::new();
    let c = &model.config;
    checkpoint.set_meta("model", model.params.kind())?;
    checkpoint.set_meta("n_nodes", &model.params.n_nodes().to_string())?;
    checkpoint.set_meta("embed_size", &c.embed_size.to_string())?;
    checkpoint.set_meta("heads", &c.heads.to_string())?;
    checkpoint.set_meta("v_layers", &c.v_layers.to_string())?;
    checkpoint.set_meta("r_layers", &c.r_layers.to_string())?;
    checkpoint.set_meta("hidden_size", &c.hidden_size.to_string())?;
    checkpoint.set_meta("homogeneous_mode", &c.homogeneous_mode.to_string())?;
    checkpoint.set_meta("reversed_virtual", &c.reversed_virtual.to_string())?;
    checkpoint.set_meta("w_alpha", &format!("{:.16e}", c.weights.alpha))?;
    checkpoint.set_meta("w_flow", &format!("{:.16e}", c.weights.flow))?;
    checkpoint.set_meta("w_conservation", &format!("{:.16e}", c.weights.conservation))?;
    checkpoint.set_meta("t0_min", &format!("{:.16e}", model.scale.t0_min))?;
    checkpoint.set_meta("t0_max", &format!("{:.16e}", model.scale.t0_max))?;
    checkpoint.set_meta("cap_min", &format!("{:.16e}", model.scale.cap_min))?;
    checkpoint.set_meta("cap_max", &format!("{:.16e}", model.scale.cap_max))?;
    for (name, tensor) in model.params.tensors() {
        checkpoint.add_tensor(&name, tensor.clone())?;
    }
    Ok(checkpoint)
}

/// Rebuild a model from a checkpoint written by [`encode_model`]. The
/// architecture metadata sizes a fresh skeleton, then every tensor is
/// restored by name with its shape verified.
pub fn decode_model<T: Scalar>(checkpoint: &Checkpoint<T>) -> Result<SavedModel<T>, HetGatError> {
    let config = ModelConfig {
        embed_size: meta_usize(checkpoint, "embed_size")?,
        heads: meta_usize(checkpoint, "heads")?,
        v_layers: meta_usize(checkpoint, "v_layers")?,
        r_layers: meta_usize(checkpoint, "r_layers")?,
        hidden_size: meta_usize(checkpoint, "hidden_size")?,
        homogeneous_mode: meta_bool(checkpoint, "homogeneous_mode")?,
        reversed_virtual: meta_bool(checkpoint, "reversed_virtual")?,
        weights: LossWeights {
            alpha: meta_f64(checkpoint, "w_alpha")?,
            flow: meta_f64(checkpoint, "w_flow")?,
            conservation: meta_f64(checkpoint, "w_conservation")?,
        },
    };
    let scale = FeatureScale {
        t0_min: meta_scalar(checkpoint, "t0_min")?,
        t0_max: meta_scalar(checkpoint, "t0_max")?,
        cap_min: meta_scalar(checkpoint, "cap_min")?,
        cap_max: meta_scalar(checkpoint, "cap_max")?,
    };
    let n_nodes = meta_usize(checkpoint, "n_nodes")?;
    let kind = meta_value(checkpoint, "model")?;
    let mut params = match kind {
        "hetgat" => ModelParams::HetGat(HetGatParams::init(&config, n_nodes, 0)?),
        "fcnn" => ModelParams::Fcnn(FcnnParams::init(&config, n_nodes, 0)?),
        other => {
            return Err(HetGatError::Checkpoint(format!("unknown model kind {other}")));
        }
    };
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    if names.len() != checkpoint.tensors().len() {
        return Err(HetGatError::Checkpoint(format!(
            "checkpoint holds {} tensors, the architecture needs {}",
            checkpoint.tensors().len(),
            names.len()
        )));
    }
    for (name, slot) in names.iter().zip(params.tensors_mut()) {
        let stored = checkpoint
            .tensor(name)
            .ok_or_else(|| HetGatError::Checkpoint(format!("missing tensor {name}")))?;
        if stored.shape() != slot.shape() {
            return Err(HetGatError::Checkpoint(format!(
                "tensor {name} is {:?}, expected {:?}",
                stored.shape(),
                slot.shape()
            )));
        }
        *slot = stored.clone();
    }
    Ok(SavedModel {
        params,
        config,
        scale,
    })
}

/// Serialize a model to checkpoint text. The output is deterministic:
/// the same model always yields the same bytes.
pub fn model_to_text<T: Scalar>(model: &SavedModel<T>) -> Result<String, HetGatError> {
    Ok(encode_model(model)?.to_text())
}

pub fn model_from_text<T: Scalar>(text: &str) -> Result<SavedModel<T>, HetGatError> {
    decode_model(&Checkpoint::from_text(text)?)
}

pub fn save_model<T: Scalar>(
    path: impl AsRef<Path>,
    model: &SavedModel<T>,
) -> Result<(), HetGatError> {
    encode_model(model)?.save(path)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<SavedModel<T>, HetGatError> {
    Ok(decode_model(&Checkpoint::load(path)?)?)
}
