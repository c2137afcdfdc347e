use std::collections::BTreeSet;

use netcore::{normalize_demand, Network, OdMatrix, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use uesolver::{solve_ue_frank_wolfe, SolverOptions};

use crate::config::{DisruptionLevel, ScenarioConfig};
use crate::error::ScenarioError;
use crate::perturb::{mask_od, scale_capacities, scale_od};

/// Demand total every generated sample is normalized to, so loss
/// magnitudes are comparable across networks.
pub const SAMPLE_DEMAND_TOTAL: f64 = 100.0;

/// Provenance of one sample: the disruption level its capacities were
/// drawn under and the seed of its private random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleMeta {
    pub level: DisruptionLevel,
    pub seed: u64,
}

/// One supervised example: a perturbed network, the full and the
/// partially observed demand, and the equilibrium labels.
#[derive(Clone, Debug)]
pub struct Sample<T: Scalar = f64> {
    pub network: Network<T>,
    /// Complete demand, used for the ground-truth solve and the
    /// conservation loss.
    pub od_true: OdMatrix<T>,
    /// Demand as the model sees it: `od_true` with the masked pairs
    /// removed.
    pub od_observed: OdMatrix<T>,
    /// Masked origin-destination pairs, sorted.
    pub mask: Vec<(usize, usize)>,
    /// Equilibrium flow per link.
    pub flows: Vec<T>,
    /// Equilibrium flow-capacity ratio per link.
    pub ratios: Vec<T>,
    pub meta: SampleMeta,
}

/// Dataset header: how the samples were made and where the train/test
/// boundary sits.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: ScenarioConfig,
    pub n_samples: usize,
    /// Samples `[0, split_index)` are the training split, the rest the
    /// test split.
    pub split_index: usize,
}

pub const SCHEMA_VERSION: u32 = 1;

/// A generated dataset: manifest plus samples in generation order.
#[derive(Clone, Debug)]
pub struct Dataset<T: Scalar = f64> {
    pub manifest: Manifest,
    pub samples: Vec<Sample<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn train(&self) -> &[Sample<T>] {
        &self.samples[..self.manifest.split_index]
    }

    pub fn test(&self) -> &[Sample<T>] {
        &self.samples[self.manifest.split_index..]
    }
}

/// Mixes a sample index into the master seed so each sample owns an
/// independent, reproducible random stream.
fn sample_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn build_sample<T: Scalar>(
    base_network: &Network<T>,
    base_od: &OdMatrix<T>,
    config: &ScenarioConfig,
    index: usize,
) -> Result<Sample<T>, ScenarioError> {
    let seed = sample_seed(config.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = config.disruption_level.for_sample(index);

    let network = scale_capacities(base_network, &mut rng, level)?;
    let scaled = scale_od(base_od, &mut rng, config.od_scale_low, config.od_scale_high)?;
    let od_true = normalize_demand(&scaled, T::from_f64(SAMPLE_DEMAND_TOTAL).unwrap())?;

    let solution = solve_ue_frank_wolfe(&network, &od_true, &SolverOptions::default())
        .map_err(|source| ScenarioError::Solve {
            sample: index,
            source,
        })?;
    if !solution.converged {
        return Err(ScenarioError::Generation(format!(
            "equilibrium solve for sample {index} stopped after {} iterations \
             without converging",
            solution.iterations
        )));
    }

    let (od_observed, mask) = mask_od(&od_true, config.mask_ratio, &mut rng)?;
    Ok(Sample {
        network,
        od_true,
        od_observed,
        mask,
        flows: solution.flows,
        ratios: solution.ratios,
        meta: SampleMeta { level, seed },
    })
}

/// Generates `config.samples` perturbed-and-solved samples from a base
/// network and demand. Samples are independent and solved in parallel;
/// output order and content depend only on the inputs and the seed.
pub fn generate_dataset<T: Scalar>(
    base_network: &Network<T>,
    base_od: &OdMatrix<T>,
    config: &ScenarioConfig,
) -> Result<Dataset<T>, ScenarioError> {
    config.validate()?;
    if base_od.is_empty() {
        return Err(ScenarioError::Domain(
            "base demand matrix is empty".to_string(),
        ));
    }
    let results: Vec<Result<Sample<T>, ScenarioError>> = (0..config.samples)
        .into_par_iter()
        .map(|i| build_sample(base_network, base_od, config, i))
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    for result in results {
        samples.push(result?);
    }
    Ok(Dataset {
        manifest: Manifest {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            n_samples: samples.len(),
            split_index: samples.len() * 4 / 5,
        },
        samples,
    })
}

/// Rescales demand to `target_total` and capacities by the same factor.
/// BPR times depend on flow only through the flow-capacity ratio, so the
/// equilibrium ratios (and flows, up to the factor) are preserved while
/// the magnitudes move to a common scale.
pub fn normalize_problem<T: Scalar>(
    net: &Network<T>,
    od: &OdMatrix<T>,
    target_total: T,
) -> Result<(Network<T>, OdMatrix<T>), ScenarioError> {
    let od_scaled = normalize_demand(od, target_total)?;
    let factor = target_total / od.total();
    let links = net
        .links()
        .iter()
        .map(|l| {
            let mut link = l.clone();
            link.capacity = link.capacity * factor;
            link
        })
        .collect();
    let net_scaled =
        Network::with_first_thru(net.nodes().to_vec(), links, net.first_thru_node())?;
    Ok((net_scaled, od_scaled))
}

/// Spread measures of a dataset: the coefficient of variation of each
/// link's capacity across samples and of each demand entry across
/// samples, both averaged.
#[derive(Clone, Copy, Debug)]
pub struct DatasetStats {
    pub capacity_cov: f64,
    pub demand_cov: f64,
    pub samples: usize,
}

fn mean_cov(series: impl Iterator<Item = Vec<f64>>) -> f64 {
    let mut covs = Vec::new();
    for values in series {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if mean == 0.0 {
            continue;
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        covs.push(var.sqrt() / mean);
    }
    if covs.is_empty() {
        0.0
    } else {
        covs.iter().sum::<f64>() / covs.len() as f64
    }
}

/// Computes [`DatasetStats`] over samples sharing the first sample's link
/// count (all of them, for generated datasets).
pub fn dataset_stats<T: Scalar>(samples: &[Sample<T>]) -> DatasetStats {
    if samples.is_empty() {
        return DatasetStats {
            capacity_cov: 0.0,
            demand_cov: 0.0,
            samples: 0,
        };
    }
    let link_count = samples[0].network.link_count();
    let comparable: Vec<&Sample<T>> = samples
        .iter()
        .filter(|s| s.network.link_count() == link_count)
        .collect();

    let capacity_cov = mean_cov((0..link_count).map(|e| {
        comparable
            .iter()
            .map(|s| s.network.link(e).capacity.to_f64().unwrap())
            .collect()
    }));

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for sample in samples {
        pairs.extend(sample.od_true.iter().map(|(o, d, _)| (o, d)));
    }
    let demand_cov = mean_cov(pairs.iter().map(|&(o, d)| {
        samples
            .iter()
            .map(|s| s.od_true.get(o, d).to_f64().unwrap())
            .collect()
    }));

    DatasetStats {
        capacity_cov,
        demand_cov,
        samples: samples.len(),
    }
}
