use netcore::{Network, Scalar};

use crate::error::SolveError;
use crate::shortest::dijkstra;

/// A simple path as an ordered list of link ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub links: Vec<usize>,
}

impl Path {
    /// Node sequence of the path, origin first.
    pub fn nodes<T: Scalar>(&self, net: &Network<T>) -> Vec<usize> {
        let mut nodes = Vec::with_capacity(self.links.len() + 1);
        if let Some(&first) = self.links.first() {
            nodes.push(net.link(first).from);
        }
        for &e in &self.links {
            nodes.push(net.link(e).to);
        }
        nodes
    }

    /// Total cost of the path under the given per-link times.
    pub fn cost<T: Scalar>(&self, times: &[T]) -> T {
        self.links.iter().map(|&e| times[e]).sum()
    }
}

/// Enumerates simple paths from `origin` to `dest`, cheapest first by
/// free-flow time, up to `max_paths`. Returns an empty list when the pair
/// is disconnected.
///
/// Implemented as ranked spur-path search: the next-cheapest path is found
/// by re-running a restricted shortest-path search from every node of an
/// already-accepted path with the conflicting edges banned, so the output
/// is loopless and cost-ordered without enumerating the exponential path
/// space.
pub fn enumerate_paths<T: Scalar>(
    net: &Network<T>,
    origin: usize,
    dest: usize,
    max_paths: usize,
) -> Result<Vec<Path>, SolveError> {
    if max_paths == 0 {
        return Err(SolveError::Domain("max_paths must be at least 1".into()));
    }
    let n = net.node_count();
    if origin >= n || dest >= n {
        return Err(SolveError::Domain(format!(
            "path endpoints ({origin}, {dest}) outside 0..{n}"
        )));
    }
    if origin == dest {
        return Ok(Vec::new());
    }
    let times: Vec<T> = net.links().iter().map(|l| l.free_flow_time).collect();

    let mut accepted: Vec<Path> = Vec::new();
    let first = dijkstra(net, &times, origin, None, None);
    match first.path_to(net, dest) {
        Some(links) => accepted.push(Path { links }),
        None => return Ok(Vec::new()),
    }

    // Candidate pool of (cost, path), deduplicated; drained cheapest-first
    // with a lexicographic tie-break for determinism.
    let mut candidates: Vec<(T, Path)> = Vec::new();

    while accepted.len() < max_paths {
        let prev = accepted.last().unwrap().clone();
        let prev_nodes = prev.nodes(net);
        let mut banned_links = vec![false; net.link_count()];
        let mut banned_nodes = vec![false; n];

        for spur_idx in 0..prev.links.len() {
            let spur_node = prev_nodes[spur_idx];
            let root = &prev.links[..spur_idx];

            banned_links.iter_mut().for_each(|b| *b = false);
            banned_nodes.iter_mut().for_each(|b| *b = false);
            for path in &accepted {
                if path.links.len() > spur_idx && path.links[..spur_idx] == *root {
                    banned_links[path.links[spur_idx]] = true;
                }
            }
            for &node in &prev_nodes[..spur_idx] {
                banned_nodes[node] = true;
            }

            let tree = dijkstra(net, &times, spur_node, Some(&banned_links), Some(&banned_nodes));
            let Some(spur_links) = tree.path_to(net, dest) else {
                continue;
            };
            let mut links = root.to_vec();
            links.extend(spur_links);
            let candidate = Path { links };
            if accepted.contains(&candidate)
                || candidates.iter().any(|(_, p)| *p == candidate)
            {
                continue;
            }
            let cost = candidate.cost(&times);
            candidates.push((cost, candidate));
        }

        let Some(best) = candidates
            .iter()
            .enumerate()
            .min_by(|(_, (ca, pa)), (_, (cb, pb))| {
                ca.partial_cmp(cb)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| pa.cmp(pb))
            })
            .map(|(i, _)| i)
        else {
            break;
        };
        accepted.push(candidates.swap_remove(best).1);
    }
    Ok(accepted)
}
