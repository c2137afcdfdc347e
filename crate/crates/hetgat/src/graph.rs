use netcore::{Network, OdMatrix, Scalar};
use tensorad::Tensor;

use crate::error::HetGatError;

/// Min-max bounds for the two physical edge features, fitted once over a
/// dataset so every network's features land in [0, 1] on a common scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureScale<T: Scalar = f64> {
    pub t0_min: T,
    pub t0_max: T,
    pub cap_min: T,
    pub cap_max: T,
}

impl<T: Scalar> FeatureScale<T> {
    /// Fits the bounds over every link of every given network.
    pub fn fit<'a, I>(networks: I) -> Result<Self, HetGatError>
    where
        I: IntoIterator<Item = &'a Network<T>>,
    {
        let mut scale = Self {
            t0_min: T::infinity(),
            t0_max: T::neg_infinity(),
            cap_min: T::infinity(),
            cap_max: T::neg_infinity(),
        };
        let mut links = 0usize;
        for net in networks {
            for link in net.links() {
                scale.t0_min = scale.t0_min.min(link.free_flow_time);
                scale.t0_max = scale.t0_max.max(link.free_flow_time);
                scale.cap_min = scale.cap_min.min(link.capacity);
                scale.cap_max = scale.cap_max.max(link.capacity);
                links += 1;
            }
        }
        if links == 0 {
            return Err(HetGatError::Shape(
                "cannot fit a feature scale with no links".to_string(),
            ));
        }
        Ok(scale)
    }

    /// Normalizes one value into [0, 1], clamping out-of-range inputs so
    /// unseen networks cannot blow up attention scores. A degenerate
    /// range maps to the midpoint.
    fn normalize(min: T, max: T, value: T) -> T {
        let width = max - min;
        if width <= T::zero() {
            return T::from(0.5).unwrap();
        }
        ((value - min) / width).max(T::zero()).min(T::one())
    }

    pub fn normalize_t0(&self, value: T) -> T {
        Self::normalize(self.t0_min, self.t0_max, value)
    }

    pub fn normalize_capacity(&self, value: T) -> T {
        Self::normalize(self.cap_min, self.cap_max, value)
    }
}

/// The model's view of one sample: road edges with normalized physical
/// features, demand edges from observed OD pairs, and the raw node
/// feature matrix.
#[derive(Clone, Debug)]
pub struct HeteroGraph<T: Scalar = f64> {
    pub n_nodes: usize,
    /// Road edge endpoints, in network link order.
    pub real_from: Vec<usize>,
    pub real_to: Vec<usize>,
    /// Per road edge: normalized (free-flow time, capacity), one row each.
    pub real_beta: Tensor<T>,
    /// Raw capacity per road edge, for turning predicted ratios into flows.
    pub real_capacity: Tensor<T>,
    /// Demand edge endpoints, origin to destination, ascending pair order.
    pub virtual_from: Vec<usize>,
    pub virtual_to: Vec<usize>,
    /// Node features: row u holds the observed demand from u to every
    /// node, then u's normalized coordinates.
    pub features: Tensor<T>,
}

impl<T: Scalar> HeteroGraph<T> {
    pub fn real_edge_count(&self) -> usize {
        self.real_from.len()
    }

    pub fn virtual_edge_count(&self) -> usize {
        self.virtual_from.len()
    }
}

/// Assembles the raw node feature matrix (|V| x (|V|+2)): observed demand
/// rows followed by coordinates min-max normalized over the nodes that
/// touch a road link. Nodes without any road link (padding nodes) get
/// zero coordinates, keeping their rows identically zero.
pub fn build_node_features<T: Scalar>(
    network: &Network<T>,
    od_observed: &OdMatrix<T>,
) -> Result<Tensor<T>, HetGatError> {
    let n = network.node_count();
    if let Some(node) = od_observed.max_node() {
        if node >= n {
            return Err(HetGatError::Shape(format!(
                "demand references node {node} but the network has {n} nodes"
            )));
        }
    }
    let mut connected = vec![false; n];
    for link in network.links() {
        connected[link.from] = true;
        connected[link.to] = true;
    }
    let (mut x_min, mut x_max) = (T::infinity(), T::neg_infinity());
    let (mut y_min, mut y_max) = (T::infinity(), T::neg_infinity());
    for (node, &on) in network.nodes().iter().zip(&connected) {
        if on {
            x_min = x_min.min(node.x);
            x_max = x_max.max(node.x);
            y_min = y_min.min(node.y);
            y_max = y_max.max(node.y);
        }
    }
    let norm = |min: T, max: T, v: T| {
        let width = max - min;
        if width <= T::zero() {
            T::zero()
        } else {
            (v - min) / width
        }
    };
    let mut features = Tensor::zeros(n, n + 2);
    for (o, d, q) in od_observed.iter() {
        features.set(o, d, q);
    }
    for (u, node) in network.nodes().iter().enumerate() {
        if connected[u] {
            features.set(u, n, norm(x_min, x_max, node.x));
            features.set(u, n + 1, norm(y_min, y_max, node.y));
        }
    }
    Ok(features)
}

/// Builds the heterogeneous graph for one network and its observed
/// demand. A demand edge runs origin to destination for every positive
/// observed pair; `reversed_virtual` adds the opposite direction as well.
pub fn build_hetero_graph<T: Scalar>(
    network: &Network<T>,
    od_observed: &OdMatrix<T>,
    scale: &FeatureScale<T>,
    reversed_virtual: bool,
) -> Result<HeteroGraph<T>, HetGatError> {
    if network.node_count() == 0 {
        return Err(HetGatError::Shape("network has no nodes".to_string()));
    }
    let links = network.links();
    let mut real_beta = Tensor::zeros(links.len(), 2);
    let mut real_capacity = Tensor::zeros(links.len(), 1);
    for (e, link) in links.iter().enumerate() {
        real_beta.set(e, 0, scale.normalize_t0(link.free_flow_time));
        real_beta.set(e, 1, scale.normalize_capacity(link.capacity));
        real_capacity.set(e, 0, link.capacity);
    }
    let mut virtual_from: Vec<usize> = Vec::with_capacity(od_observed.len());
    let mut virtual_to: Vec<usize> = Vec::with_capacity(od_observed.len());
    for (o, d, _) in od_observed.iter() {
        virtual_from.push(o);
        virtual_to.push(d);
    }
    if reversed_virtual {
        let pairs: std::collections::BTreeSet<(usize, usize)> = virtual_from
            .iter()
            .zip(&virtual_to)
            .map(|(&o, &d)| (o, d))
            .collect();
        for &(o, d) in &pairs {
            if !pairs.contains(&(d, o)) {
                virtual_from.push(d);
                virtual_to.push(o);
            }
        }
    }
    Ok(HeteroGraph {
        n_nodes: network.node_count(),
        real_from: links.iter().map(|l| l.from).collect(),
        real_to: links.iter().map(|l| l.to).collect(),
        real_beta,
        real_capacity,
        virtual_from,
        virtual_to,
        features: build_node_features(network, od_observed)?,
    })
}
