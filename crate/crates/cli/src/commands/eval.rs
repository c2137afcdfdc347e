//! `eval`: score a trained checkpoint on a dataset split.
//!
//! Writes the metric table plus a per-link predictions file that `plot`
//! can render. Samples narrower than the model are padded with isolated
//! dummy nodes, so one homogenized model scores across mixed graph sizes.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hetgat::{load_model, predict, ModelParams, SavedModel};
use scenario::{load_dataset, Dataset, Sample};
use traineval::{
    evaluate_metrics, homogenize_sample, metrics_csv, prepare_samples, Metrics, MetricsRow,
};

use crate::config_file::{resolve, FlatConfig};
use crate::output::RunDir;

pub struct EvalArgs {
    pub data: Option<String>,
    pub ckpt: Option<String>,
    pub split: Option<String>,
}

/// Header of the predictions file consumed by `plot`.
pub const PREDICTIONS_HEADER: &str = "link_id,alpha_pred,flow_pred,alpha_true,flow_true";

fn kind_name(params: &ModelParams<f64>) -> &'static str {
    match params {
        ModelParams::HetGat(_) => "hetgat",
        ModelParams::Fcnn(_) => "fcnn",
    }
}

/// Per-link predictions against labels over a slice of samples, padded to
/// the model width first.
pub fn predictions_csv(model: &SavedModel<f64>, samples: &[Sample<f64>]) -> Result<String> {
    let width = model.params.n_nodes();
    let padded: Vec<Sample<f64>> = samples
        .iter()
        .map(|s| homogenize_sample(s, width))
        .collect::<Result<_, _>>()?;
    let prepared = prepare_samples(&padded, &model.scale, model.config.reversed_virtual)?;
    let mut out = String::from(PREDICTIONS_HEADER);
    out.push('\n');
    for (sample, prep) in samples.iter().zip(&prepared) {
        let pred = predict(&prep.graph, &model.params, &model.config)?;
        for e in 0..sample.network.link_count() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e + 1,
                pred.alpha[e],
                pred.flow[e],
                sample.ratios[e],
                sample.flows[e]
            );
        }
    }
    Ok(out)
}

fn print_split(name: &str, count: usize, metrics: &Metrics) {
    println!(
        "split {name} ({count} samples): mae_ratio {:.6}, rmse_ratio {:.6}, mae_flow {:.6}, rmse_flow {:.6}, conservation {:.6}",
        metrics.mae_ratio,
        metrics.rmse_ratio,
        metrics.mae_flow,
        metrics.rmse_flow,
        metrics.normalized_conservation
    );
}

pub fn run(config: &FlatConfig, out_root: &Path, args: &EvalArgs) -> Result<()> {
    let data_path = resolve(args.data.clone(), config, "eval", "data")
        .context("missing input: set eval.data in the config or pass --data")?;
    let ckpt_path = resolve(args.ckpt.clone(), config, "eval", "ckpt")
        .context("missing input: set eval.ckpt in the config or pass --ckpt")?;
    let split = resolve(args.split.clone(), config, "eval", "split")
        .unwrap_or_else(|| "test".to_string());

    let dataset: Dataset<f64> = load_dataset(&data_path)?;
    let model = load_model::<f64>(&ckpt_path)
        .with_context(|| format!("loading checkpoint {ckpt_path}"))?;
    let kind = kind_name(&model.params);

    let splits: Vec<(&str, &[Sample<f64>])> = match split.as_str() {
        "train" => vec![("train", dataset.train())],
        "test" => vec![("test", dataset.test())],
        "all" => vec![("train", dataset.train()), ("test", dataset.test())],
        other => bail!("unknown split {other:?}; expected train, test, or all"),
    };

    let mut rows = Vec::new();
    for (name, samples) in &splits {
        if samples.is_empty() {
            bail!("split {name} of {data_path} is empty");
        }
        let metrics = evaluate_metrics(&model, samples)?;
        print_split(name, samples.len(), &metrics);
        rows.push(MetricsRow {
            split: name.to_string(),
            model: kind.to_string(),
            metrics,
        });
    }

    let (pred_split, pred_samples) = *splits.last().expect("at least one split is evaluated");
    let predictions = predictions_csv(&model, pred_samples)?;

    let mut run = RunDir::create(
        out_root,
        "eval",
        config,
        &[
            ("data", data_path.clone()),
            ("ckpt", ckpt_path.clone()),
            ("split", split.clone()),
        ],
    )?;
    run.record("model", kind);
    run.record("predictions_split", pred_split);
    let metrics_path = run.write_text("metrics.csv", &metrics_csv(&rows))?;
    let pred_path = run.write_text("predictions.csv", &predictions)?;
    let manifest = run.finish()?;
    println!("wrote {}", metrics_path.display());
    println!("wrote {}", pred_path.display());
    println!("wrote {}", manifest.display());
    Ok(())
}
