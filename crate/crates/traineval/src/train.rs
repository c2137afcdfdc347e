use std::collections::HashMap;
use std::mem;

use hetgat::{
    forward, stage, total_loss, FcnnParams, FeatureScale, HetGatParams, ModelConfig, ModelParams,
    SavedModel,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use scenario::{Dataset, Sample};
use tensorad::{adam_step, AdamState, Tape, Tensor};

use crate::config::{ModelKind, Strategy, TrainConfig};
use crate::error::TrainError;
use crate::metrics::{evaluate_metrics, evaluate_prepared, Metrics};
use crate::prepare::{homogenize_sample, prepare_samples, PreparedSample};

/// Averaged training loss components of one epoch, with the validation
/// metrics measured after it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub l_alpha: f64,
    pub l_flow: f64,
    pub l_conservation: f64,
    pub l_total: f64,
    pub val: Metrics,
}

/// Complete training trace: one record per epoch plus the total optimizer
/// step count.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub steps: usize,
}

/// Per-fold metrics of a cross-validation run with their mean and
/// population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldSummary {
    pub per_fold: Vec<Metrics>,
    pub mean: Metrics,
    pub stddev: Metrics,
}

/// Derives the shuffle seed of one epoch from the master seed
/// (splitmix64 finalizer), so epochs draw distinct but reproducible
/// orders.
fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    let mut z = seed.wrapping_add((epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct SampleTerm {
    l_alpha: f64,
    l_flow: f64,
    l_conservation: f64,
    l_total: f64,
    grads: Vec<Tensor<f64>>,
}

/// One sample's loss values and parameter gradients, on its own tape.
fn sample_term(
    params: &ModelParams<f64>,
    model: &ModelConfig,
    sample: &PreparedSample<f64>,
) -> Result<SampleTerm, TrainError> {
    let mut tape: Tape<f64> = Tape::new();
    let (vars, leaves) = stage(&mut tape, params)?;
    let pred = forward(&mut tape, &sample.graph, &vars, model)?;
    let loss = total_loss(
        &mut tape,
        &pred,
        &sample.ratios,
        &sample.flows,
        &sample.network,
        &sample.od_true,
        &model.weights,
    )?;
    let grads = tape.backward(loss.l_total, &leaves)?;
    let scalar = |v| tape.value(v).get(0, 0);
    Ok(SampleTerm {
        l_alpha: scalar(loss.l_alpha),
        l_flow: scalar(loss.l_flow),
        l_conservation: scalar(loss.l_conservation),
        l_total: scalar(loss.l_total),
        grads,
    })
}

/// Runs the optimizer over owned copies of the parameter tensors, since
/// the optimizer works on a contiguous slice.
fn adam_step_on(
    params: &mut ModelParams<f64>,
    grads: &[Tensor<f64>],
    state: &mut AdamState<f64>,
    learning_rate: f64,
) -> Result<(), TrainError> {
    let mut slots = params.tensors_mut();
    let mut owned: Vec<Tensor<f64>> = slots
        .iter_mut()
        .map(|slot| mem::replace(&mut **slot, Tensor::zeros(1, 1)))
        .collect();
    let stepped = adam_step(&mut owned, grads, state, learning_rate);
    for (slot, tensor) in slots.into_iter().zip(owned) {
        *slot = tensor;
    }
    stepped?;
    Ok(())
}

/// Minibatch Adam over prepared samples. `frozen` flags tensors (in
/// [`ModelParams::tensors`] order) whose gradients are discarded, which
/// leaves them bit-identical throughout.
fn train_loop(
    train: &[PreparedSample<f64>],
    val: &[PreparedSample<f64>],
    config: &TrainConfig,
    mut params: ModelParams<f64>,
    scale: FeatureScale<f64>,
    frozen: &[bool],
) -> Result<(SavedModel<f64>, History), TrainError> {
    let names: Vec<String> = params.tensors().into_iter().map(|(name, _)| name).collect();
    let mut adam: AdamState<f64> = AdamState::new();
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut steps = 0usize;
    let n_train = train.len() as f64;
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(config.seed, epoch));
        order.shuffle(&mut rng);
        let mut record = EpochRecord {
            l_alpha: 0.0,
            l_flow: 0.0,
            l_conservation: 0.0,
            l_total: 0.0,
            val: Metrics {
                mae_flow: 0.0,
                rmse_flow: 0.0,
                mae_ratio: 0.0,
                rmse_ratio: 0.0,
                normalized_conservation: 0.0,
            },
        };
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let terms = batch
                .par_iter()
                .map(|&i| sample_term(&params, &config.model, &train[i]))
                .collect::<Result<Vec<_>, TrainError>>()?;
            for term in &terms {
                if !term.l_total.is_finite() {
                    return Err(TrainError::NonFinite {
                        epoch,
                        batch: batch_idx,
                        what: format!("loss {}", term.l_total),
                    });
                }
            }
            let inv = 1.0 / batch.len() as f64;
            let mut grads: Vec<Tensor<f64>> = terms[0].grads.iter().map(|g| g.map(|x| x * inv)).collect();
            for term in &terms[1..] {
                for (acc, g) in grads.iter_mut().zip(&term.grads) {
                    for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += b * inv;
                    }
                }
            }
            for (i, grad) in grads.iter_mut().enumerate() {
                if frozen[i] {
                    *grad = Tensor::zeros(grad.rows(), grad.cols());
                }
            }
            if let Some(i) = grads.iter().position(|g| !g.all_finite()) {
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: batch_idx,
                    what: format!("gradient of {}", names[i]),
                });
            }
            adam_step_on(&mut params, &grads, &mut adam, config.learning_rate)?;
            steps += 1;
            if let Some(i) = params.tensors().iter().position(|(_, t)| !t.all_finite()) {
                return Err(TrainError::NonFinite {
                    epoch,
                    batch: batch_idx,
                    what: format!("parameter {}", names[i]),
                });
            }
            for term in &terms {
                record.l_alpha += term.l_alpha / n_train;
                record.l_flow += term.l_flow / n_train;
                record.l_conservation += term.l_conservation / n_train;
                record.l_total += term.l_total / n_train;
            }
        }
        record.val = evaluate_prepared(&params, &config.model, val)?;
        epochs.push(record);
    }
    let model = SavedModel {
        params,
        config: config.model,
        scale,
    };
    Ok((model, History { epochs, steps }))
}

fn init_params(
    kind: ModelKind,
    model: &ModelConfig,
    n_nodes: usize,
    seed: u64,
) -> Result<ModelParams<f64>, TrainError> {
    Ok(match kind {
        ModelKind::HetGat => ModelParams::HetGat(HetGatParams::init(model, n_nodes, seed)?),
        ModelKind::Fcnn => ModelParams::Fcnn(FcnnParams::init(model, n_nodes, seed)?),
    })
}

fn uniform_node_count(splits: &[&[Sample<f64>]]) -> Result<usize, TrainError> {
    let mut counts = splits.iter().flat_map(|s| s.iter()).map(|s| s.network.node_count());
    let first = counts
        .next()
        .ok_or_else(|| TrainError::Data("no samples to train on".into()))?;
    if counts.any(|n| n != first) {
        return Err(TrainError::Data(
            "samples have mixed node counts; use the homogenized strategy".into(),
        ));
    }
    Ok(first)
}

/// Trains a fresh model on explicit train and validation splits.
pub fn train_on_splits(
    train: &[Sample<f64>],
    val: &[Sample<f64>],
    config: &TrainConfig,
) -> Result<(SavedModel<f64>, History), TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::Data("training split is empty".into()));
    }
    if val.is_empty() {
        return Err(TrainError::Data("validation split is empty".into()));
    }
    let reversed = config.model.reversed_virtual;
    match config.strategy {
        Strategy::Transfer => Err(TrainError::Config(
            "the transfer strategy needs a pretrained model; call transfer_retrain".into(),
        )),
        Strategy::Standard => {
            let n = uniform_node_count(&[train, val])?;
            let scale = FeatureScale::fit(train.iter().map(|s| &s.network))?;
            let train_prep = prepare_samples(train, &scale, reversed)?;
            let val_prep = prepare_samples(val, &scale, reversed)?;
            let params = init_params(config.kind, &config.model, n, config.seed)?;
            let frozen = vec![false; params.tensors().len()];
            train_loop(&train_prep, &val_prep, config, params, scale, &frozen)
        }
        Strategy::Homogenized => {
            let n_max = train
                .iter()
                .chain(val)
                .map(|s| s.network.node_count())
                .max()
                .unwrap();
            let train_padded: Vec<Sample<f64>> = train
                .iter()
                .map(|s| homogenize_sample(s, n_max))
                .collect::<Result<_, _>>()?;
            let val_padded: Vec<Sample<f64>> = val
                .iter()
                .map(|s| homogenize_sample(s, n_max))
                .collect::<Result<_, _>>()?;
            let scale = FeatureScale::fit(train_padded.iter().map(|s| &s.network))?;
            let train_prep = prepare_samples(&train_padded, &scale, reversed)?;
            let val_prep = prepare_samples(&val_padded, &scale, reversed)?;
            let params = init_params(config.kind, &config.model, n_max, config.seed)?;
            let frozen = vec![false; params.tensors().len()];
            train_loop(&train_prep, &val_prep, config, params, scale, &frozen)
        }
    }
}

/// Trains on the dataset's recorded train split, validating each epoch on
/// its test split.
pub fn train(
    dataset: &Dataset<f64>,
    config: &TrainConfig,
) -> Result<(SavedModel<f64>, History), TrainError> {
    train_on_splits(dataset.train(), dataset.test(), config)
}

/// Adapts a pretrained graph attention model to a dataset with a
/// different node count: the preprocessing and edge-head layers are
/// re-initialized at the new width and trained, while every encoder
/// tensor is carried over frozen. The pretrained feature scale is kept so
/// the frozen encoders keep seeing features in the range they were
/// trained on.
pub fn transfer_retrain(
    pretrained: &SavedModel<f64>,
    dataset: &Dataset<f64>,
    config: &TrainConfig,
) -> Result<(SavedModel<f64>, History), TrainError> {
    config.validate()?;
    if !matches!(pretrained.params, ModelParams::HetGat(_)) {
        return Err(TrainError::Config(
            "transfer needs the graph attention model; the dense baseline has no encoder stack to carry over".into(),
        ));
    }
    let old = &pretrained.config;
    let new = &config.model;
    if old.embed_size != new.embed_size
        || old.heads != new.heads
        || old.v_layers != new.v_layers
        || old.r_layers != new.r_layers
    {
        return Err(TrainError::Config(format!(
            "encoder geometry mismatch: pretrained has embed {} with {} heads and {}+{} layers, requested embed {} with {} heads and {}+{} layers",
            old.embed_size,
            old.heads,
            old.v_layers,
            old.r_layers,
            new.embed_size,
            new.heads,
            new.v_layers,
            new.r_layers,
        )));
    }
    let train_split = dataset.train();
    let val_split = dataset.test();
    if train_split.is_empty() {
        return Err(TrainError::Data("training split is empty".into()));
    }
    if val_split.is_empty() {
        return Err(TrainError::Data("validation split is empty".into()));
    }
    let n = uniform_node_count(&[train_split, val_split])?;
    let mut params = ModelParams::HetGat(HetGatParams::init(new, n, config.seed)?);
    let names: Vec<String> = params.tensors().into_iter().map(|(name, _)| name).collect();
    let sources: HashMap<String, Tensor<f64>> = pretrained
        .params
        .tensors()
        .into_iter()
        .map(|(name, tensor)| (name, tensor.clone()))
        .collect();
    let mut frozen = vec![false; names.len()];
    for (i, slot) in params.tensors_mut().into_iter().enumerate() {
        let name = &names[i];
        if !(name.starts_with('v') || name.starts_with('r')) {
            continue;
        }
        let source = sources.get(name).ok_or_else(|| {
            TrainError::Config(format!("pretrained model lacks encoder tensor {name}"))
        })?;
        if (source.rows(), source.cols()) != (slot.rows(), slot.cols()) {
            return Err(TrainError::Config(format!(
                "encoder tensor {name} is {}x{} in the pretrained model but {}x{} here",
                source.rows(),
                source.cols(),
                slot.rows(),
                slot.cols(),
            )));
        }
        *slot = source.clone();
        frozen[i] = true;
    }
    let scale = pretrained.scale;
    let train_prep = prepare_samples(train_split, &scale, new.reversed_virtual)?;
    let val_prep = prepare_samples(val_split, &scale, new.reversed_virtual)?;
    train_loop(&train_prep, &val_prep, config, params, scale, &frozen)
}

/// Contiguous `(start, end)` index ranges splitting `n` items into `k`
/// folds whose sizes differ by at most one.
pub(crate) fn fold_bounds(n: usize, k: usize) -> Vec<(usize, usize)> {
    let base = n / k;
    let rem = n % k;
    let mut bounds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < rem);
        bounds.push((start, start + size));
        start += size;
    }
    bounds
}

fn metrics_stats(folds: &[Metrics]) -> (Metrics, Metrics) {
    let k = folds.len() as f64;
    let stat = |get: fn(&Metrics) -> f64| {
        let mean = folds.iter().map(get).sum::<f64>() / k;
        let var = folds
            .iter()
            .map(|m| {
                let d = get(m) - mean;
                d * d
            })
            .sum::<f64>()
            / k;
        (mean, var.sqrt())
    };
    let (mean_mf, sd_mf) = stat(|m| m.mae_flow);
    let (mean_rf, sd_rf) = stat(|m| m.rmse_flow);
    let (mean_mr, sd_mr) = stat(|m| m.mae_ratio);
    let (mean_rr, sd_rr) = stat(|m| m.rmse_ratio);
    let (mean_lc, sd_lc) = stat(|m| m.normalized_conservation);
    (
        Metrics {
            mae_flow: mean_mf,
            rmse_flow: mean_rf,
            mae_ratio: mean_mr,
            rmse_ratio: mean_rr,
            normalized_conservation: mean_lc,
        },
        Metrics {
            mae_flow: sd_mf,
            rmse_flow: sd_rf,
            mae_ratio: sd_mr,
            rmse_ratio: sd_rr,
            normalized_conservation: sd_lc,
        },
    )
}

/// k-fold cross-validation: each contiguous fold serves once as the
/// validation split while a fresh model trains on the rest.
pub fn kfold_cv(
    samples: &[Sample<f64>],
    k: usize,
    config: &TrainConfig,
) -> Result<FoldSummary, TrainError> {
    config.validate()?;
    if k < 2 {
        return Err(TrainError::Config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > samples.len() {
        return Err(TrainError::Config(format!(
            "k = {k} folds exceed {} samples",
            samples.len()
        )));
    }
    let mut per_fold = Vec::with_capacity(k);
    for (start, end) in fold_bounds(samples.len(), k) {
        let val = &samples[start..end];
        let rest: Vec<Sample<f64>> = samples[..start]
            .iter()
            .chain(&samples[end..])
            .cloned()
            .collect();
        let (model, _) = train_on_splits(&rest, val, config)?;
        per_fold.push(evaluate_metrics(&model, val)?);
    }
    let (mean, stddev) = metrics_stats(&per_fold);
    Ok(FoldSummary {
        per_fold,
        mean,
        stddev,
    })
}
