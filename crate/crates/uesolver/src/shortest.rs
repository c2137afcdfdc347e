use std::cmp::Ordering;
use std::collections::BinaryHeap;

use netcore::{Network, Scalar};

use crate::error::SolveError;

/// One-to-all shortest-path tree: minimal cost per node and the incoming
/// link of one shortest path. Unreachable nodes have infinite distance and
/// no predecessor.
#[derive(Clone, Debug)]
pub struct SpTree<T: Scalar = f64> {
    pub origin: usize,
    pub dist: Vec<T>,
    pub pred: Vec<Option<usize>>,
}

impl<T: Scalar> SpTree<T> {
    /// Link ids of the shortest path from the origin to `dest`, in travel
    /// order; `None` when `dest` is unreachable.
    pub fn path_to(&self, net: &Network<T>, dest: usize) -> Option<Vec<usize>> {
        if !self.dist[dest].is_finite() {
            return None;
        }
        let mut links = Vec::new();
        let mut node = dest;
        while node != self.origin {
            let e = self.pred[node]?;
            links.push(e);
            node = net.link(e).from;
        }
        links.reverse();
        Some(links)
    }
}

struct State<T> {
    cost: T,
    node: usize,
}

impl<T: Scalar> PartialEq for State<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.node == other.node
    }
}

impl<T: Scalar> Eq for State<T> {}

impl<T: Scalar> Ord for State<T> {
    // Reversed so the max-heap pops the cheapest state; ties break toward
    // the smaller node id for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl<T: Scalar> PartialOrd for State<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting shortest paths from `origin` under the given link times.
///
/// Nodes below the network's first-through marker are expanded only when
/// they are the origin itself: trips may start or end at them but never
/// pass through.
pub fn shortest_path_tree<T: Scalar>(
    net: &Network<T>,
    times: &[T],
    origin: usize,
) -> Result<SpTree<T>, SolveError> {
    validate_times(net, times)?;
    if origin >= net.node_count() {
        return Err(SolveError::Domain(format!(
            "origin {origin} outside 0..{}",
            net.node_count()
        )));
    }
    Ok(dijkstra(net, times, origin, None, None))
}

pub(crate) fn validate_times<T: Scalar>(net: &Network<T>, times: &[T]) -> Result<(), SolveError> {
    if times.len() != net.link_count() {
        return Err(SolveError::Domain(format!(
            "expected {} link times, got {}",
            net.link_count(),
            times.len()
        )));
    }
    for (e, &t) in times.iter().enumerate() {
        if !t.is_finite() || t < T::zero() {
            return Err(SolveError::Domain(format!(
                "link {e} time must be finite and non-negative, got {t}"
            )));
        }
    }
    Ok(())
}

/// Dijkstra with optional link and node bans (used by path enumeration).
/// Inputs are assumed validated.
pub(crate) fn dijkstra<T: Scalar>(
    net: &Network<T>,
    times: &[T],
    origin: usize,
    banned_links: Option<&[bool]>,
    banned_nodes: Option<&[bool]>,
) -> SpTree<T> {
    let n = net.node_count();
    let mut dist = vec![T::infinity(); n];
    let mut pred = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[origin] = T::zero();
    heap.push(State {
        cost: T::zero(),
        node: origin,
    });

    while let Some(State { cost, node }) = heap.pop() {
        if settled[node] {
            continue;
        }
        settled[node] = true;
        // Zone nodes are endpoints only; they relax no outgoing links
        // unless the search starts there.
        if node != origin && node < net.first_thru_node() {
            continue;
        }
        for &e in net.out_links(node) {
            if banned_links.is_some_and(|b| b[e]) {
                continue;
            }
            let link = net.link(e);
            if banned_nodes.is_some_and(|b| b[link.to]) {
                continue;
            }
            let next = cost + times[e];
            if next < dist[link.to] {
                dist[link.to] = next;
                pred[link.to] = Some(e);
                heap.push(State {
                    cost: next,
                    node: link.to,
                });
            }
        }
    }
    SpTree { origin, dist, pred }
}
