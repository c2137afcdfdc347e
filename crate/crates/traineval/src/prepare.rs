use hetgat::{build_hetero_graph, FeatureScale, HeteroGraph};
use netcore::{Network, Node, OdMatrix, Scalar};
use scenario::Sample;

use crate::error::TrainError;

/// A sample with its graph encoding cached, so repeated epochs skip the
/// feature construction.
#[derive(Clone, Debug)]
pub struct PreparedSample<T: Scalar = f64> {
    pub graph: HeteroGraph<T>,
    pub network: Network<T>,
    pub od_true: OdMatrix<T>,
    pub ratios: Vec<T>,
    pub flows: Vec<T>,
    pub demand_total: T,
}

/// Encodes every sample against a shared feature scale.
pub fn prepare_samples<T: Scalar>(
    samples: &[Sample<T>],
    scale: &FeatureScale<T>,
    reversed_virtual: bool,
) -> Result<Vec<PreparedSample<T>>, TrainError> {
    samples
        .iter()
        .map(|sample| {
            let graph =
                build_hetero_graph(&sample.network, &sample.od_observed, scale, reversed_virtual)?;
            Ok(PreparedSample {
                graph,
                network: sample.network.clone(),
                od_true: sample.od_true.clone(),
                ratios: sample.ratios.clone(),
                flows: sample.flows.clone(),
                demand_total: sample.od_true.total(),
            })
        })
        .collect()
}

/// Pads a sample to `n_max` nodes with isolated dummies: no links, no
/// demand, coordinates at the origin. Real links, demand, and labels are
/// untouched, so predictions on real links stay comparable.
pub fn homogenize_sample<T: Scalar>(
    sample: &Sample<T>,
    n_max: usize,
) -> Result<Sample<T>, TrainError> {
    let n = sample.network.node_count();
    if n > n_max {
        return Err(TrainError::Data(format!(
            "sample has {n} nodes, cannot pad down to {n_max}"
        )));
    }
    if n == n_max {
        return Ok(sample.clone());
    }
    let mut nodes = sample.network.nodes().to_vec();
    for id in n..n_max {
        nodes.push(Node {
            id,
            x: T::zero(),
            y: T::zero(),
        });
    }
    let network = Network::with_first_thru(
        nodes,
        sample.network.links().to_vec(),
        sample.network.first_thru_node(),
    )
    .map_err(|e| TrainError::Data(e.to_string()))?;
    Ok(Sample {
        network,
        od_true: sample.od_true.clone(),
        od_observed: sample.od_observed.clone(),
        mask: sample.mask.clone(),
        flows: sample.flows.clone(),
        ratios: sample.ratios.clone(),
        meta: sample.meta,
    })
}

/// Pads every sample to the dataset's largest node count and returns the
/// padded samples with that count.
pub fn homogenize_all<T: Scalar>(
    samples: &[Sample<T>],
) -> Result<(Vec<Sample<T>>, usize), TrainError> {
    let n_max = samples
        .iter()
        .map(|s| s.network.node_count())
        .max()
        .ok_or_else(|| TrainError::Data("no samples to homogenize".into()))?;
    let padded = samples
        .iter()
        .map(|s| homogenize_sample(s, n_max))
        .collect::<Result<_, _>>()?;
    Ok((padded, n_max))
}
