//! `gen-data`: a labeled dataset of perturbed equilibrium problems.
//!
//! The base problem comes either from TNTP files (`scenario.net` plus
//! `scenario.trips`) or from a seeded synthetic grid (`scenario.grid_nodes`).
//! Either way the base is rescaled to the common per-sample demand total
//! first, so capacities and demand sit in the regime the perturbations
//! and the feature encoding expect.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use netcore::{parse_tntp_net, parse_tntp_trips, Network, OdMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scenario::{
    dataset_stats, gen_grid_random_network, gen_random_od, generate_dataset, normalize_problem,
    save_dataset, DisruptionLevel, ScenarioConfig, SAMPLE_DEMAND_TOTAL,
};

use crate::config_file::FlatConfig;
use crate::output::RunDir;

fn parse_level(raw: &str) -> Result<DisruptionLevel> {
    match raw.to_ascii_lowercase().as_str() {
        "l" | "light" => Ok(DisruptionLevel::Light),
        "m" | "medium" => Ok(DisruptionLevel::Medium),
        "h" | "heavy" => Ok(DisruptionLevel::Heavy),
        "mixed" | "mixed-lmh" => Ok(DisruptionLevel::MixedLmh),
        other => bail!("unknown disruption level {other:?}; expected light, medium, heavy, or mixed"),
    }
}

fn base_problem(
    config: &FlatConfig,
    seed: u64,
) -> Result<(Network<f64>, OdMatrix<f64>, String)> {
    if let Some(net_path) = config.get("scenario", "net") {
        let trips_path = config.require("scenario", "trips", "--set scenario.trips=PATH")?;
        let net_text = fs::read_to_string(net_path)
            .with_context(|| format!("reading network file {net_path}"))?;
        let net = parse_tntp_net::<f64>(&net_text)
            .with_context(|| format!("parsing network file {net_path}"))?;
        let trips_text = fs::read_to_string(&trips_path)
            .with_context(|| format!("reading trips file {trips_path}"))?;
        let od = parse_tntp_trips::<f64>(&trips_text)
            .with_context(|| format!("parsing trips file {trips_path}"))?;
        Ok((net, od, format!("{net_path} + {trips_path}")))
    } else if let Some(target) = config.parse::<usize>("scenario", "grid_nodes")? {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = gen_grid_random_network::<f64, _>(target, &mut rng)?;
        let pair_probability = config.parse_or("scenario", "od_pair_probability", 0.3)?;
        let od = gen_random_od(
            net.node_count(),
            &mut rng,
            pair_probability,
            SAMPLE_DEMAND_TOTAL,
        )?;
        let desc = format!("synthetic grid, {} nodes", net.node_count());
        Ok((net, od, desc))
    } else {
        bail!("missing base problem: set scenario.net + scenario.trips or scenario.grid_nodes");
    }
}

pub fn run(config: &FlatConfig, out_root: &Path) -> Result<()> {
    let seed = config.parse_or("scenario", "seed", 0u64)?;
    let scenario = ScenarioConfig {
        od_scale_low: config.parse_or("scenario", "od_scale_low", 0.5)?,
        od_scale_high: config.parse_or("scenario", "od_scale_high", 1.5)?,
        disruption_level: parse_level(config.get("scenario", "disruption").unwrap_or("mixed"))?,
        mask_ratio: config.parse_or("scenario", "mask_ratio", 0.0)?,
        seed,
        samples: config.parse_or("scenario", "samples", 100usize)?,
    };

    let (base_net, base_od, base_desc) = base_problem(config, seed)?;
    let (net, od) = normalize_problem(&base_net, &base_od, SAMPLE_DEMAND_TOTAL)?;
    println!(
        "base problem: {base_desc} ({} nodes, {} links, {} demand entries)",
        net.node_count(),
        net.link_count(),
        od.len()
    );

    let dataset = generate_dataset(&net, &od, &scenario)?;
    let stats = dataset_stats(&dataset.samples);
    println!(
        "generated {} samples ({} train / {} test), disruption {}",
        dataset.manifest.n_samples,
        dataset.manifest.split_index,
        dataset.manifest.n_samples - dataset.manifest.split_index,
        scenario.disruption_level
    );
    println!(
        "diversity: capacity cov {:.4}, demand cov {:.4}",
        stats.capacity_cov, stats.demand_cov
    );

    let mut run = RunDir::create(out_root, "gen-data", config, &[])?;
    let dataset_path = run.file("dataset.jsonl");
    save_dataset(&dataset, &dataset_path)?;
    run.record_output("dataset.jsonl");
    run.record("base", base_desc);
    run.record("samples", dataset.manifest.n_samples);
    run.record("split_index", dataset.manifest.split_index);
    run.record("capacity_cov", stats.capacity_cov);
    run.record("demand_cov", stats.demand_cov);
    let manifest = run.finish()?;
    println!("wrote {}", dataset_path.display());
    println!("wrote {}", manifest.display());
    Ok(())
}
