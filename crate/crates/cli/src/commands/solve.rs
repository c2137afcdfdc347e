//! `solve`: one user-equilibrium assignment from TNTP files.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use netcore::{parse_tntp_net, parse_tntp_trips};
use uesolver::{solution_csv, solve_ue_frank_wolfe, trace_csv, wardrop_gap, SolverOptions};

use crate::config_file::{resolve, FlatConfig};
use crate::output::RunDir;

pub struct SolveArgs {
    pub net: Option<String>,
    pub trips: Option<String>,
    pub threshold: Option<f64>,
}

pub fn run(config: &FlatConfig, out_root: &Path, args: &SolveArgs) -> Result<()> {
    let net_path = resolve(args.net.clone(), config, "solve", "net")
        .context("missing input: set solve.net in the config or pass --net")?;
    let trips_path = resolve(args.trips.clone(), config, "solve", "trips")
        .context("missing input: set solve.trips in the config or pass --trips")?;
    let threshold = match args.threshold {
        Some(value) => value,
        None => config.parse_or("solve", "threshold", 1e-5)?,
    };
    let defaults = SolverOptions::<f64>::default();
    let options = SolverOptions {
        convergence_threshold: threshold,
        max_iterations: config.parse_or("solve", "max_iterations", defaults.max_iterations)?,
        ..defaults
    };

    let net_text = fs::read_to_string(&net_path)
        .with_context(|| format!("reading network file {net_path}"))?;
    let net = parse_tntp_net::<f64>(&net_text)
        .with_context(|| format!("parsing network file {net_path}"))?;
    let trips_text = fs::read_to_string(&trips_path)
        .with_context(|| format!("reading trips file {trips_path}"))?;
    let od = parse_tntp_trips::<f64>(&trips_text)
        .with_context(|| format!("parsing trips file {trips_path}"))?;
    println!(
        "parsed {} nodes, {} links, {} demand entries (total {})",
        net.node_count(),
        net.link_count(),
        od.len(),
        od.total()
    );

    let solution = solve_ue_frank_wolfe(&net, &od, &options)?;
    if !solution.converged {
        bail!(
            "assignment stopped after {} iterations without meeting the {threshold:e} criterion",
            solution.iterations
        );
    }
    let gap = wardrop_gap(&net, &solution.flows, &od, 16)?;
    println!(
        "converged in {} iterations: beckmann {:.6}, rel change {:.3e}, wardrop rel gap {:.3e}",
        solution.iterations,
        solution.beckmann_value,
        solution.final_rel_change,
        gap.aggregate_rel_gap
    );

    let mut run = RunDir::create(
        out_root,
        "solve",
        config,
        &[
            ("net", net_path.clone()),
            ("trips", trips_path.clone()),
            ("threshold", threshold.to_string()),
        ],
    )?;
    run.record("nodes", net.node_count());
    run.record("links", net.link_count());
    run.record("iterations", solution.iterations);
    run.record("beckmann", solution.beckmann_value);
    run.record("final_rel_change", solution.final_rel_change);
    run.record("wardrop_rel_gap", gap.aggregate_rel_gap);
    let solution_path = run.write_text("solution.csv", &solution_csv(&net, &solution))?;
    let trace_path = run.write_text("trace.csv", &trace_csv(&solution))?;
    let manifest = run.finish()?;
    println!("wrote {}", solution_path.display());
    println!("wrote {}", trace_path.display());
    println!("wrote {}", manifest.display());
    Ok(())
}
