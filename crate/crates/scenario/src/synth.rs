use std::collections::HashSet;

use netcore::{Link, Network, Node, OdMatrix, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ScenarioError;

/// Fraction of grid links added again as random extra links during
/// synthetic generation.
const EXTRA_LINK_FRACTION: f64 = 0.10;

/// Attribute ranges for synthetic links: free-flow time and capacity.
const SYNTH_T0_RANGE: (f64, f64) = (1.0, 5.0);
const SYNTH_CAP_RANGE: (f64, f64) = (5.0, 20.0);

const RETRY_FACTOR: usize = 100;

fn draw<T: Scalar, R: Rng>(rng: &mut R, range: (f64, f64)) -> T {
    T::from_f64(rng.gen_range(range.0..range.1)).unwrap()
}

/// True when every alive node can reach and be reached from every other
/// alive node over alive directed edges.
fn strongly_connected(
    node_alive: &[bool],
    edges: &[(usize, usize)],
    edge_alive: &[bool],
) -> bool {
    let n = node_alive.len();
    let alive_count = node_alive.iter().filter(|&&a| a).count();
    let Some(start) = node_alive.iter().position(|&a| a) else {
        return true;
    };
    let mut forward = vec![Vec::new(); n];
    let mut backward = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        if edge_alive[e] && node_alive[u] && node_alive[v] {
            forward[u].push(v);
            backward[v].push(u);
        }
    }
    let reach = |adj: &[Vec<usize>]| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(u) = stack.pop() {
            count += 1;
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        count
    };
    reach(&forward) == alive_count && reach(&backward) == alive_count
}

/// Synthetic road network: the smallest square grid holding the target,
/// bidirectional 4-neighbor links, a fixed fraction of random extra
/// directed links, then random node removals (strong connectivity
/// preserved) down to exactly `target_nodes`. Link attributes are drawn
/// uniformly; coordinates keep the grid layout.
pub fn gen_grid_random_network<T: Scalar, R: Rng>(
    target_nodes: usize,
    rng: &mut R,
) -> Result<Network<T>, ScenarioError> {
    if target_nodes < 4 {
        return Err(ScenarioError::Domain(format!(
            "synthetic networks need at least 4 nodes, got {target_nodes}"
        )));
    }
    let side = (target_nodes as f64).sqrt().ceil() as usize;
    let n0 = side * side;

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let u = r * side + c;
            if c + 1 < side {
                edges.push((u, u + 1));
                edges.push((u + 1, u));
            }
            if r + 1 < side {
                edges.push((u, u + side));
                edges.push((u + side, u));
            }
        }
    }
    let grid_edge_count = edges.len();

    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let extra_target = (grid_edge_count as f64 * EXTRA_LINK_FRACTION).round() as usize;
    let mut attempts = 0;
    let mut added = 0;
    while added < extra_target {
        attempts += 1;
        if attempts > RETRY_FACTOR * extra_target + RETRY_FACTOR {
            return Err(ScenarioError::Generation(format!(
                "could not place {extra_target} extra links on a {side}x{side} grid"
            )));
        }
        let u = rng.gen_range(0..n0);
        let v = rng.gen_range(0..n0);
        if u == v || present.contains(&(u, v)) {
            continue;
        }
        present.insert((u, v));
        edges.push((u, v));
        added += 1;
    }

    let mut node_alive = vec![true; n0];
    let mut edge_alive = vec![true; edges.len()];
    let mut alive_count = n0;
    while alive_count > target_nodes {
        let mut candidates: Vec<usize> =
            (0..n0).filter(|&u| node_alive[u]).collect();
        candidates.shuffle(rng);
        let mut removed = false;
        for u in candidates {
            node_alive[u] = false;
            if strongly_connected(&node_alive, &edges, &edge_alive) {
                for (e, &(a, b)) in edges.iter().enumerate() {
                    if a == u || b == u {
                        edge_alive[e] = false;
                    }
                }
                alive_count -= 1;
                removed = true;
                break;
            }
            node_alive[u] = true;
        }
        if !removed {
            return Err(ScenarioError::Generation(format!(
                "no node of the remaining {alive_count} can be removed without \
                 disconnecting the graph"
            )));
        }
    }

    let mut new_id = vec![usize::MAX; n0];
    let mut nodes = Vec::with_capacity(target_nodes);
    for u in 0..n0 {
        if node_alive[u] {
            new_id[u] = nodes.len();
            nodes.push(Node {
                id: nodes.len(),
                x: T::from_usize(u % side).unwrap(),
                y: T::from_usize(u / side).unwrap(),
            });
        }
    }
    let mut links = Vec::new();
    for (e, &(u, v)) in edges.iter().enumerate() {
        if edge_alive[e] {
            links.push(Link {
                from: new_id[u],
                to: new_id[v],
                free_flow_time: draw(rng, SYNTH_T0_RANGE),
                capacity: draw(rng, SYNTH_CAP_RANGE),
                bpr_b: T::from_f64(0.15).unwrap(),
                bpr_power: T::from_f64(4.0).unwrap(),
            });
        }
    }
    Network::new(nodes, links).map_err(ScenarioError::from)
}

/// Removes `n_remove` random links (each removal must keep the network
/// strongly connected) and adds `n_add` random links between previously
/// unlinked ordered pairs, with synthetic attributes. The node set is
/// untouched.
pub fn perturb_topology<T: Scalar, R: Rng>(
    net: &Network<T>,
    rng: &mut R,
    n_add: usize,
    n_remove: usize,
) -> Result<Network<T>, ScenarioError> {
    if n_remove >= net.link_count() {
        return Err(ScenarioError::Domain(format!(
            "cannot remove {n_remove} of {} links",
            net.link_count()
        )));
    }
    let node_alive = vec![true; net.node_count()];
    let edges: Vec<(usize, usize)> = net.links().iter().map(|l| (l.from, l.to)).collect();
    let mut edge_alive = vec![true; edges.len()];
    for round in 0..n_remove {
        let mut candidates: Vec<usize> =
            (0..edges.len()).filter(|&e| edge_alive[e]).collect();
        candidates.shuffle(rng);
        let mut removed = false;
        for e in candidates {
            edge_alive[e] = false;
            if strongly_connected(&node_alive, &edges, &edge_alive) {
                removed = true;
                break;
            }
            edge_alive[e] = true;
        }
        if !removed {
            return Err(ScenarioError::Generation(format!(
                "no removable link left after {round} removals"
            )));
        }
    }

    let mut present: HashSet<(usize, usize)> = edges
        .iter()
        .enumerate()
        .filter(|&(e, _)| edge_alive[e])
        .map(|(_, &pair)| pair)
        .collect();
    let mut links: Vec<Link<T>> = net
        .links()
        .iter()
        .enumerate()
        .filter(|&(e, _)| edge_alive[e])
        .map(|(_, l)| l.clone())
        .collect();
    let mut attempts = 0;
    let mut added = 0;
    while added < n_add {
        attempts += 1;
        if attempts > RETRY_FACTOR * n_add + RETRY_FACTOR {
            return Err(ScenarioError::Generation(format!(
                "could not place {n_add} new links on {} nodes",
                net.node_count()
            )));
        }
        let u = rng.gen_range(0..net.node_count());
        let v = rng.gen_range(0..net.node_count());
        if u == v || present.contains(&(u, v)) {
            continue;
        }
        present.insert((u, v));
        links.push(Link {
            from: u,
            to: v,
            free_flow_time: draw(rng, SYNTH_T0_RANGE),
            capacity: draw(rng, SYNTH_CAP_RANGE),
            bpr_b: T::from_f64(0.15).unwrap(),
            bpr_power: T::from_f64(4.0).unwrap(),
        });
        added += 1;
    }
    Network::with_first_thru(net.nodes().to_vec(), links, net.first_thru_node())
        .map_err(ScenarioError::from)
}

/// Random demand matrix: each ordered pair is included with probability
/// `pair_probability`, values drawn from U(0.5, 1.5) and then rescaled so
/// the total equals `total`. At least one pair is always produced.
pub fn gen_random_od<T: Scalar, R: Rng>(
    n_nodes: usize,
    rng: &mut R,
    pair_probability: f64,
    total: T,
) -> Result<OdMatrix<T>, ScenarioError> {
    if n_nodes < 2 {
        return Err(ScenarioError::Domain(format!(
            "demand needs at least 2 nodes, got {n_nodes}"
        )));
    }
    if !(0.0..=1.0).contains(&pair_probability) || pair_probability == 0.0 {
        return Err(ScenarioError::Domain(format!(
            "pair probability {pair_probability} must lie in (0, 1]"
        )));
    }
    let mut entries: Vec<(usize, usize, T)> = Vec::new();
    for o in 0..n_nodes {
        for d in 0..n_nodes {
            if o != d && rng.gen_bool(pair_probability) {
                entries.push((o, d, draw(rng, (0.5, 1.5))));
            }
        }
    }
    if entries.is_empty() {
        let o = rng.gen_range(0..n_nodes);
        let mut d = rng.gen_range(0..n_nodes - 1);
        if d >= o {
            d += 1;
        }
        entries.push((o, d, T::one()));
    }
    let od = OdMatrix::from_entries(entries)?;
    netcore::normalize_demand(&od, total).map_err(ScenarioError::from)
}
