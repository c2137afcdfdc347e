use netcore::{Network, OdMatrix, Scalar};

use crate::error::SolveError;
use crate::shortest::{dijkstra, validate_times};

/// All-or-nothing assignment: loads every OD demand entirely onto one
/// shortest path under the given times. The result conserves demand at
/// every node exactly (up to float summation).
pub fn all_or_nothing<T: Scalar>(
    net: &Network<T>,
    times: &[T],
    od: &OdMatrix<T>,
) -> Result<Vec<T>, SolveError> {
    validate_times(net, times)?;
    if let Some(max) = od.max_node() {
        if max >= net.node_count() {
            return Err(SolveError::Domain(format!(
                "demand references node {max} outside 0..{}",
                net.node_count()
            )));
        }
    }
    let mut flows = vec![T::zero(); net.link_count()];
    let mut tree = None;
    let mut tree_origin = usize::MAX;
    for (origin, dest, demand) in od.iter() {
        if origin != tree_origin {
            tree = Some(dijkstra(net, times, origin, None, None));
            tree_origin = origin;
        }
        let tree = tree.as_ref().unwrap();
        if !tree.dist[dest].is_finite() {
            return Err(SolveError::Infeasible { origin, dest });
        }
        let mut node = dest;
        while node != origin {
            let e = tree.pred[node].expect("finite distance implies a predecessor");
            flows[e] += demand;
            node = net.link(e).from;
        }
    }
    Ok(flows)
}

/// Per-node conservation residual of a flow vector against a demand matrix:
/// inflow minus outflow minus the node's net demand balance (arrivals minus
/// departures). Zero everywhere for any feasible assignment.
pub fn node_residuals<T: Scalar>(net: &Network<T>, flows: &[T], od: &OdMatrix<T>) -> Vec<T> {
    let n = net.node_count();
    let mut resid = vec![T::zero(); n];
    for (e, link) in net.links().iter().enumerate() {
        resid[link.to] += flows[e];
        resid[link.from] -= flows[e];
    }
    for (o, d, q) in od.iter() {
        // Net demand balance: arrivals add, departures subtract.
        resid[d] -= q;
        resid[o] += q;
    }
    resid
}
