//! `verify`: audit every sample of a dataset against the equilibrium
//! conditions.
//!
//! Each sample's stored flows are checked twice: the Wardrop relative gap
//! (no used path can be meaningfully cheaper than the best one) and node
//! flow conservation against the full demand. The audit table is written
//! even when samples fail, so a red run still leaves the evidence behind.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use scenario::{load_dataset, Dataset, Sample};
use uesolver::{node_residuals, wardrop_gap};

use crate::config_file::{resolve, FlatConfig};
use crate::output::RunDir;

pub struct VerifyArgs {
    pub data: Option<String>,
}

struct Audit {
    rel_gap: f64,
    max_residual: f64,
    demand_total: f64,
    ok: bool,
}

fn audit_sample(sample: &Sample<f64>, gap_tol: f64, residual_tol: f64, max_paths: usize) -> Result<Audit> {
    let gap = wardrop_gap(
        &sample.network,
        &sample.flows,
        &sample.od_true,
        max_paths,
    )?;
    let max_residual = node_residuals(&sample.network, &sample.flows, &sample.od_true)
        .into_iter()
        .fold(0.0_f64, |acc, r| acc.max(r.abs()));
    let demand_total = sample.od_true.total();
    let ok = gap.aggregate_rel_gap < gap_tol && max_residual < residual_tol * demand_total;
    Ok(Audit {
        rel_gap: gap.aggregate_rel_gap,
        max_residual,
        demand_total,
        ok,
    })
}

pub fn run(config: &FlatConfig, out_root: &Path, args: &VerifyArgs) -> Result<()> {
    let data_path = resolve(args.data.clone(), config, "verify", "data")
        .context("missing input: set verify.data in the config or pass --data")?;
    let gap_tol = config.parse_or("verify", "gap_tol", 1e-4)?;
    let residual_tol = config.parse_or("verify", "residual_tol", 1e-6)?;
    let max_paths = config.parse_or("verify", "max_paths", 16usize)?;

    let dataset: Dataset<f64> = load_dataset(&data_path)?;
    if dataset.samples.is_empty() {
        bail!("dataset {data_path} has no samples");
    }
    let audits: Vec<Audit> = dataset
        .samples
        .par_iter()
        .map(|sample| audit_sample(sample, gap_tol, residual_tol, max_paths))
        .collect::<Result<_>>()?;

    let mut csv = String::from(
        "sample,level,seed,wardrop_rel_gap,max_node_residual,demand_total,ok\n",
    );
    let mut worst_gap = 0.0_f64;
    let mut worst_residual = 0.0_f64;
    let mut failures = Vec::new();
    for (i, (sample, audit)) in dataset.samples.iter().zip(&audits).enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            i,
            sample.meta.level,
            sample.meta.seed,
            audit.rel_gap,
            audit.max_residual,
            audit.demand_total,
            audit.ok
        );
        worst_gap = worst_gap.max(audit.rel_gap);
        worst_residual = worst_residual.max(audit.max_residual / audit.demand_total);
        if !audit.ok {
            failures.push(i);
        }
    }

    let mut run = RunDir::create(
        out_root,
        "verify",
        config,
        &[
            ("data", data_path.clone()),
            ("gap_tol", gap_tol.to_string()),
            ("residual_tol", residual_tol.to_string()),
        ],
    )?;
    run.record("samples", dataset.samples.len());
    run.record("failures", failures.len());
    run.record("worst_rel_gap", worst_gap);
    run.record("worst_relative_residual", worst_residual);
    let audit_path = run.write_text("audit.csv", &csv)?;
    let manifest = run.finish()?;
    println!(
        "audited {} samples: worst wardrop rel gap {:.3e} (tol {:.1e}), worst relative residual {:.3e} (tol {:.1e})",
        dataset.samples.len(),
        worst_gap,
        gap_tol,
        worst_residual,
        residual_tol
    );
    println!("wrote {}", audit_path.display());
    println!("wrote {}", manifest.display());

    if !failures.is_empty() {
        let shown: Vec<String> = failures.iter().take(8).map(|i| i.to_string()).collect();
        bail!(
            "{} of {} samples fail the equilibrium audit (first failing: {})",
            failures.len(),
            dataset.samples.len(),
            shown.join(", ")
        );
    }
    println!("all samples satisfy the equilibrium conditions");
    Ok(())
}
