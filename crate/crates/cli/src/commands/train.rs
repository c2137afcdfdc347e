//! `train`: fit a surrogate model on a generated dataset.
//!
//! Hyperparameters come from the `[train]` and `[model]` config sections;
//! every key defaults to the library defaults, so a minimal config only
//! needs the dataset path. The transfer strategy additionally takes a
//! pretrained checkpoint whose encoder stack is carried over frozen.

use std::path::Path;

use anyhow::{Context, Result};
use hetgat::{load_model, save_model};
use scenario::{load_dataset, Dataset};
use traineval::{history_csv, transfer_retrain, ModelKind, Strategy, TrainConfig};

use crate::config_file::{resolve, FlatConfig};
use crate::output::RunDir;

pub struct TrainArgs {
    pub data: Option<String>,
    pub ckpt: Option<String>,
}

/// Builds the training configuration from the `[train]` and `[model]`
/// sections, starting from library defaults.
pub fn train_config_from(config: &FlatConfig) -> Result<TrainConfig> {
    let mut out = TrainConfig::default();
    out.learning_rate = config.parse_or("train", "learning_rate", out.learning_rate)?;
    out.batch_size = config.parse_or("train", "batch_size", out.batch_size)?;
    out.epochs = config.parse_or("train", "epochs", out.epochs)?;
    out.seed = config.parse_or("train", "seed", out.seed)?;
    out.kind = config.parse_or::<ModelKind>("train", "kind", out.kind)?;
    out.strategy = config.parse_or::<Strategy>("train", "strategy", out.strategy)?;

    let model = &mut out.model;
    model.embed_size = config.parse_or("model", "embed_size", model.embed_size)?;
    model.heads = config.parse_or("model", "heads", model.heads)?;
    model.v_layers = config.parse_or("model", "v_layers", model.v_layers)?;
    model.r_layers = config.parse_or("model", "r_layers", model.r_layers)?;
    model.hidden_size = config.parse_or("model", "hidden_size", model.hidden_size)?;
    model.homogeneous_mode =
        config.parse_or("model", "homogeneous_mode", model.homogeneous_mode)?;
    model.reversed_virtual =
        config.parse_or("model", "reversed_virtual", model.reversed_virtual)?;
    model.weights.alpha = config.parse_or("model", "w_alpha", model.weights.alpha)?;
    model.weights.flow = config.parse_or("model", "w_flow", model.weights.flow)?;
    model.weights.conservation =
        config.parse_or("model", "w_conservation", model.weights.conservation)?;
    Ok(out)
}

pub fn run(config: &FlatConfig, out_root: &Path, args: &TrainArgs) -> Result<()> {
    let data_path = resolve(args.data.clone(), config, "train", "data")
        .context("missing input: set train.data in the config or pass --data")?;
    let train_config = train_config_from(config)?;
    let dataset: Dataset<f64> = load_dataset(&data_path)?;
    println!(
        "dataset {}: {} train / {} test samples",
        data_path,
        dataset.train().len(),
        dataset.test().len()
    );

    let mut inputs = vec![("data", data_path.clone())];
    let ckpt_path = resolve(args.ckpt.clone(), config, "train", "ckpt");
    if let Some(path) = &ckpt_path {
        inputs.push(("ckpt", path.clone()));
    }

    let (model, history) = if train_config.strategy == Strategy::Transfer {
        let ckpt_path = ckpt_path.clone().context(
            "transfer training needs a pretrained checkpoint: set train.ckpt or pass --ckpt",
        )?;
        let pretrained = load_model(&ckpt_path)
            .with_context(|| format!("loading pretrained checkpoint {ckpt_path}"))?;
        transfer_retrain(&pretrained, &dataset, &train_config)?
    } else {
        traineval::train(&dataset, &train_config)?
    };

    let last = history
        .epochs
        .last()
        .context("training produced no epochs")?;
    println!(
        "trained {} ({}) for {} epochs, {} optimizer steps",
        train_config.kind,
        train_config.strategy,
        history.epochs.len(),
        history.steps
    );
    println!(
        "final train loss {:.6}; test split mae_ratio {:.6}, rmse_ratio {:.6}, conservation {:.6}",
        last.l_total, last.val.mae_ratio, last.val.rmse_ratio, last.val.normalized_conservation
    );

    let mut run = RunDir::create(out_root, "train", config, &inputs)?;
    let model_path = run.file("model.ckpt");
    save_model(&model_path, &model)?;
    run.record_output("model.ckpt");
    let history_path = run.write_text("history.csv", &history_csv(&history))?;
    run.record("kind", train_config.kind);
    run.record("strategy", train_config.strategy);
    run.record("epochs", history.epochs.len());
    run.record("steps", history.steps);
    run.record("final_l_total", last.l_total);
    run.record("test_mae_ratio", last.val.mae_ratio);
    let manifest = run.finish()?;
    println!("wrote {}", model_path.display());
    println!("wrote {}", history_path.display());
    println!("wrote {}", manifest.display());
    Ok(())
}
