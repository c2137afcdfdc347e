use std::collections::BTreeMap;

use crate::error::NetError;
use crate::scalar::Scalar;

/// A network vertex with planar coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Node<T: Scalar = f64> {
    pub id: usize,
    pub x: T,
    pub y: T,
}

/// A directed road link with BPR congestion parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Link<T: Scalar = f64> {
    pub from: usize,
    pub to: usize,
    pub free_flow_time: T,
    pub capacity: T,
    pub bpr_b: T,
    pub bpr_power: T,
}

impl<T: Scalar> Link<T> {
    /// Travel time at the given flow, `t0 * (1 + b * (flow/c)^p)`, without
    /// argument checking. Negative flow is the caller's bug; use
    /// [`bpr_time`] at trust boundaries.
    pub fn travel_time_at(&self, flow: T) -> T {
        self.free_flow_time
            * (T::one() + self.bpr_b * pow_pos(flow / self.capacity, self.bpr_power))
    }

    /// Integral of the travel-time curve from 0 to `flow`, in closed form
    /// `t0 * (flow + b * flow^(p+1) / ((p+1) * c^p))`.
    pub fn cost_integral_at(&self, flow: T) -> T {
        let p1 = self.bpr_power + T::one();
        self.free_flow_time
            * (flow + self.bpr_b * pow_pos(flow, p1) / (p1 * pow_pos(self.capacity, self.bpr_power)))
    }
}

/// `base^exp` for non-negative bases, taking the integer fast path when the
/// exponent is a small whole number (the usual BPR power is 4).
fn pow_pos<T: Scalar>(base: T, exp: T) -> T {
    if exp.fract().is_zero() {
        if let Some(e) = exp.to_i32() {
            if (0..=32).contains(&e) {
                return base.powi(e);
            }
        }
    }
    base.powf(exp)
}

/// Link travel time under the BPR curve, validating the flow argument.
pub fn bpr_time<T: Scalar>(link: &Link<T>, flow: T) -> Result<T, NetError> {
    check_flow(flow)?;
    Ok(link.travel_time_at(flow))
}

/// Contribution of one link to the Beckmann objective: the travel-time
/// integral from zero to `flow`. Its derivative in `flow` is [`bpr_time`].
pub fn beckmann_link_integral<T: Scalar>(link: &Link<T>, flow: T) -> Result<T, NetError> {
    check_flow(flow)?;
    Ok(link.cost_integral_at(flow))
}

fn check_flow<T: Scalar>(flow: T) -> Result<(), NetError> {
    if !flow.is_finite() || flow < T::zero() {
        return Err(NetError::Domain(format!(
            "flow must be finite and non-negative, got {flow}"
        )));
    }
    Ok(())
}

/// Directed road graph with per-node adjacency indexes.
///
/// Immutable after construction, so it can be shared read-only across
/// worker threads. `first_thru_node` mirrors the TNTP metadata field: nodes
/// with smaller ids act as trip endpoints only and are never traversed as
/// intermediate nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T: Scalar = f64> {
    nodes: Vec<Node<T>>,
    links: Vec<Link<T>>,
    out_index: Vec<Vec<usize>>,
    in_index: Vec<Vec<usize>>,
    first_thru_node: usize,
}

impl<T: Scalar> Network<T> {
    pub fn new(nodes: Vec<Node<T>>, links: Vec<Link<T>>) -> Result<Self, NetError> {
        Self::with_first_thru(nodes, links, 0)
    }

    pub fn with_first_thru(
        nodes: Vec<Node<T>>,
        links: Vec<Link<T>>,
        first_thru_node: usize,
    ) -> Result<Self, NetError> {
        if nodes.is_empty() {
            return Err(NetError::Structure("network needs at least one node".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(NetError::Structure(format!(
                    "node ids must be dense and ascending: position {i} holds id {}",
                    node.id
                )));
            }
            if !node.x.is_finite() || !node.y.is_finite() {
                return Err(NetError::Structure(format!(
                    "node {i} has non-finite coordinates"
                )));
            }
        }
        let n = nodes.len();
        if first_thru_node > n {
            return Err(NetError::Structure(format!(
                "first through node {first_thru_node} exceeds node count {n}"
            )));
        }
        let mut out_index = vec![Vec::new(); n];
        let mut in_index = vec![Vec::new(); n];
        for (e, link) in links.iter().enumerate() {
            if link.from >= n || link.to >= n {
                return Err(NetError::Structure(format!(
                    "link {e} references node {} outside 0..{n}",
                    link.from.max(link.to)
                )));
            }
            if link.from == link.to {
                return Err(NetError::Structure(format!(
                    "link {e} is a self-loop at node {}",
                    link.from
                )));
            }
            if !link.capacity.is_finite() || link.capacity <= T::zero() {
                return Err(NetError::Structure(format!(
                    "link {e} capacity must be positive and finite, got {}",
                    link.capacity
                )));
            }
            if !link.free_flow_time.is_finite() || link.free_flow_time < T::zero() {
                return Err(NetError::Structure(format!(
                    "link {e} free-flow time must be non-negative and finite, got {}",
                    link.free_flow_time
                )));
            }
            if !link.bpr_b.is_finite() || link.bpr_b < T::zero() {
                return Err(NetError::Structure(format!(
                    "link {e} BPR coefficient must be non-negative and finite, got {}",
                    link.bpr_b
                )));
            }
            if !link.bpr_power.is_finite() || link.bpr_power < T::one() {
                return Err(NetError::Structure(format!(
                    "link {e} BPR power must be at least 1 and finite, got {}",
                    link.bpr_power
                )));
            }
            out_index[link.from].push(e);
            in_index[link.to].push(e);
        }
        Ok(Self {
            nodes,
            links,
            out_index,
            in_index,
            first_thru_node,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link<T>] {
        &self.links
    }

    pub fn link(&self, id: usize) -> &Link<T> {
        &self.links[id]
    }

    /// Ids of links leaving `node`.
    pub fn out_links(&self, node: usize) -> &[usize] {
        &self.out_index[node]
    }

    /// Ids of links entering `node`.
    pub fn in_links(&self, node: usize) -> &[usize] {
        &self.in_index[node]
    }

    /// First node id usable as an intermediate node on a path (0-based).
    /// Zero means every node may be traversed.
    pub fn first_thru_node(&self) -> usize {
        self.first_thru_node
    }

    /// Returns a copy with the listed node coordinates replaced. Entries
    /// are `(node id, x, y)`; nodes not mentioned keep their coordinates.
    pub fn with_node_coords(mut self, coords: &[(usize, T, T)]) -> Result<Self, NetError> {
        for &(id, x, y) in coords {
            if id >= self.nodes.len() {
                return Err(NetError::Structure(format!(
                    "coordinate row references unknown node {id}"
                )));
            }
            if !x.is_finite() || !y.is_finite() {
                return Err(NetError::Structure(format!(
                    "node {id} coordinate is not finite"
                )));
            }
            self.nodes[id].x = x;
            self.nodes[id].y = y;
        }
        Ok(self)
    }
}

/// Evenly spaced positions on the unit circle; the fallback layout for
/// networks that ship without a coordinate file.
pub fn unit_circle_coords<T: Scalar>(n: usize) -> Vec<(T, T)> {
    (0..n)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * (i as f64) / (n.max(1) as f64);
            (
                T::from(theta.cos()).unwrap(),
                T::from(theta.sin()).unwrap(),
            )
        })
        .collect()
}

/// Origin-destination demand, stored sparsely with a cached total.
///
/// Diagonal entries are never retained (setting one is a no-op) and setting
/// a pair to zero removes it. Iteration order is ascending by
/// `(origin, destination)`, which keeps every consumer deterministic.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OdMatrix<T: Scalar = f64> {
    entries: BTreeMap<(usize, usize), T>,
    total: T,
}

impl<T: Scalar> OdMatrix<T> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
            total: T::zero(),
        }
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, NetError>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut od = Self::new();
        for (o, d, q) in entries {
            od.set(o, d, q)?;
        }
        Ok(od)
    }

    /// Sets the demand for one pair, dropping diagonal and zero entries.
    pub fn set(&mut self, origin: usize, dest: usize, demand: T) -> Result<(), NetError> {
        if !demand.is_finite() || demand < T::zero() {
            return Err(NetError::Domain(format!(
                "demand must be finite and non-negative, got {demand}"
            )));
        }
        if origin == dest {
            return Ok(());
        }
        if demand.is_zero() {
            self.entries.remove(&(origin, dest));
        } else {
            self.entries.insert((origin, dest), demand);
        }
        self.total = self.entries.values().copied().sum();
        Ok(())
    }

    /// Demand for one pair; zero when absent.
    pub fn get(&self, origin: usize, dest: usize) -> T {
        self.entries
            .get(&(origin, dest))
            .copied()
            .unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending `(origin, destination)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.entries.iter().map(|(&(o, d), &q)| (o, d, q))
    }

    /// Distinct origins with positive demand, ascending.
    pub fn origins(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.entries.keys().map(|&(o, _)| o).collect();
        out.dedup();
        out
    }

    /// Largest node id mentioned by any entry.
    pub fn max_node(&self) -> Option<usize> {
        self.entries.keys().map(|&(o, d)| o.max(d)).max()
    }
}

/// Rescales every entry so the total becomes `target_total`, preserving the
/// mix between pairs.
pub fn normalize_demand<T: Scalar>(
    od: &OdMatrix<T>,
    target_total: T,
) -> Result<OdMatrix<T>, NetError> {
    if !target_total.is_finite() || target_total <= T::zero() {
        return Err(NetError::Domain(format!(
            "target total must be positive and finite, got {target_total}"
        )));
    }
    if od.total().is_zero() {
        return Err(NetError::Domain(
            "cannot normalize an all-zero demand matrix".into(),
        ));
    }
    let factor = target_total / od.total();
    let mut out = OdMatrix::new();
    for (o, d, q) in od.iter() {
        out.set(o, d, q * factor)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(t0: f64, cap: f64) -> Link {
        Link {
            from: 0,
            to: 1,
            free_flow_time: t0,
            capacity: cap,
            bpr_b: 0.15,
            bpr_power: 4.0,
        }
    }

    #[test]
    fn bpr_time_matches_hand_values() {
        let l = link(1.0, 2.0);
        assert_eq!(bpr_time(&l, 0.0).unwrap(), 1.0);
        assert!((bpr_time(&l, 2.0).unwrap() - 1.15).abs() < 1e-12);
        let steep = link(3.0, 1.0);
        assert!((bpr_time(&steep, 2.0).unwrap() - 10.2).abs() < 1e-12);
    }

    #[test]
    fn bpr_time_rejects_negative_flow() {
        let l = link(1.0, 2.0);
        assert!(matches!(bpr_time(&l, -0.5), Err(NetError::Domain(_))));
        assert!(matches!(
            beckmann_link_integral(&l, f64::NAN),
            Err(NetError::Domain(_))
        ));
    }

    #[test]
    fn beckmann_integral_matches_hand_values() {
        let l = link(1.0, 2.0);
        assert_eq!(beckmann_link_integral(&l, 0.0).unwrap(), 0.0);
        assert!((beckmann_link_integral(&l, 2.0).unwrap() - 2.06).abs() < 1e-12);
    }

    #[test]
    fn beckmann_derivative_is_travel_time() {
        let l = link(1.0, 2.0);
        let x = 2.0;
        let h = 1e-4;
        let fd = (l.cost_integral_at(x + h) - l.cost_integral_at(x - h)) / (2.0 * h);
        assert!((fd - l.travel_time_at(x)).abs() < 1e-8);
    }

    #[test]
    fn bpr_time_is_strictly_increasing() {
        let l = link(2.0, 5.0);
        let mut prev = l.travel_time_at(0.0);
        for i in 1..50 {
            let t = l.travel_time_at(0.3 * i as f64);
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn network_validates_structure() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0 },
            Node { id: 1, x: 1.0, y: 0.0 },
        ];
        let mut bad = link(1.0, 2.0);
        bad.to = 0;
        assert!(matches!(
            Network::new(nodes.clone(), vec![bad]),
            Err(NetError::Structure(_))
        ));

        let mut out_of_range = link(1.0, 2.0);
        out_of_range.to = 7;
        assert!(matches!(
            Network::new(nodes.clone(), vec![out_of_range]),
            Err(NetError::Structure(_))
        ));

        let mut zero_cap = link(1.0, 0.0);
        zero_cap.capacity = 0.0;
        assert!(matches!(
            Network::new(nodes.clone(), vec![zero_cap]),
            Err(NetError::Structure(_))
        ));

        let net = Network::new(nodes, vec![link(1.0, 2.0)]).unwrap();
        assert_eq!(net.out_links(0), &[0]);
        assert_eq!(net.in_links(1), &[0]);
        assert!(net.out_links(1).is_empty());
    }

    #[test]
    fn network_rejects_sparse_node_ids() {
        let nodes = vec![
            Node { id: 0, x: 0.0, y: 0.0 },
            Node { id: 3, x: 1.0, y: 0.0 },
        ];
        assert!(matches!(
            Network::new(nodes, vec![]),
            Err(NetError::Structure(_))
        ));
    }

    #[test]
    fn od_matrix_drops_diagonal_and_zero_entries() {
        let mut od = OdMatrix::<f64>::new();
        od.set(0, 0, 5.0).unwrap();
        assert!(od.is_empty());
        od.set(0, 1, 5.0).unwrap();
        od.set(0, 2, 3.0).unwrap();
        assert_eq!(od.total(), 8.0);
        od.set(0, 1, 0.0).unwrap();
        assert_eq!(od.len(), 1);
        assert_eq!(od.total(), 3.0);
        assert_eq!(od.get(0, 1), 0.0);
        assert!(od.set(0, 1, -1.0).is_err());
    }

    #[test]
    fn od_matrix_orders_origins() {
        let od = OdMatrix::<f64>::from_entries([(2, 0, 1.0), (0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(od.origins(), vec![0, 2]);
        assert_eq!(od.max_node(), Some(3));
    }

    #[test]
    fn normalize_demand_scales_proportionally() {
        let od = OdMatrix::<f64>::from_entries([(0, 1, 50.0), (1, 2, 150.0)]).unwrap();
        let out = normalize_demand(&od, 100.0).unwrap();
        assert!((out.get(0, 1) - 25.0).abs() < 1e-12);
        assert!((out.get(1, 2) - 75.0).abs() < 1e-12);
        assert!((out.total() - 100.0).abs() < 1e-9 * 100.0);

        let same = normalize_demand(&od, od.total()).unwrap();
        assert_eq!(same, od);

        let empty = OdMatrix::<f64>::new();
        assert!(matches!(
            normalize_demand(&empty, 100.0),
            Err(NetError::Domain(_))
        ));
    }

    #[test]
    fn unit_circle_layout_is_on_the_circle() {
        let coords = unit_circle_coords::<f64>(4);
        assert_eq!(coords.len(), 4);
        assert!((coords[0].0 - 1.0).abs() < 1e-12);
        for (x, y) in coords {
            assert!((x * x + y * y - 1.0).abs() < 1e-12);
        }
    }
}
