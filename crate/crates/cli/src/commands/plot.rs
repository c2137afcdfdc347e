//! `plot`: render a true-versus-predicted scatter plot from a
//! predictions file written by `eval`.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use traineval::scatter_svg;

use crate::config_file::{resolve, FlatConfig};
use crate::output::RunDir;

pub struct PlotArgs {
    pub pred: Option<String>,
}

/// Extracts `(flow_true, flow_pred)` pairs from a predictions CSV. Columns
/// are located by header name, so extra columns and column order do not
/// matter.
pub fn scatter_points(csv: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = csv.lines();
    let header = lines.next().context("predictions file is empty")?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .with_context(|| format!("predictions file is missing the {name} column"))
    };
    let true_col = col("flow_true")?;
    let pred_col = col("flow_pred")?;

    let mut points = Vec::new();
    for (index, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            bail!(
                "line {}: expected {} fields, got {}",
                index + 2,
                names.len(),
                fields.len()
            );
        }
        let parse = |c: usize| -> Result<f64> {
            fields[c]
                .trim()
                .parse()
                .with_context(|| format!("line {}: bad number {:?}", index + 2, fields[c]))
        };
        points.push((parse(true_col)?, parse(pred_col)?));
    }
    if points.is_empty() {
        bail!("predictions file has a header but no rows");
    }
    Ok(points)
}

pub fn run(config: &FlatConfig, out_root: &Path, args: &PlotArgs) -> Result<()> {
    let pred_path = resolve(args.pred.clone(), config, "plot", "pred")
        .context("missing input: set plot.pred in the config or pass --pred")?;
    let csv = fs::read_to_string(&pred_path)
        .with_context(|| format!("reading predictions file {pred_path}"))?;
    let points = scatter_points(&csv)?;

    let mut run = RunDir::create(out_root, "plot", config, &[("pred", pred_path.clone())])?;
    run.record("points", points.len());
    let svg_path = run.write_text("scatter.svg", &scatter_svg(&points))?;
    let manifest = run.finish()?;
    println!("plotted {} points", points.len());
    println!("wrote {}", svg_path.display());
    println!("wrote {}", manifest.display());
    Ok(())
}
