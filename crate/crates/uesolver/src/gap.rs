use netcore::{Network, OdMatrix, Scalar};

use crate::error::SolveError;
use crate::paths::enumerate_paths;
use crate::shortest::dijkstra;

/// Path-cost audit for one OD pair at the solution's travel times.
#[derive(Clone, Copy, Debug)]
pub struct OdGap<T: Scalar = f64> {
    pub origin: usize,
    pub dest: usize,
    /// Cheapest cost over all enumerated paths.
    pub min_cost: T,
    /// Cheapest cost over enumerated paths that actually carry flow.
    pub min_used_cost: T,
    /// `min_used_cost - min_cost`; zero at equilibrium.
    pub gap: T,
}

/// Equilibrium audit: per-OD path-cost gaps plus the aggregate relative
/// gap, `(total cost - cost of an all-shortest-path assignment) / total
/// cost`, which is exactly zero at user equilibrium.
#[derive(Clone, Debug)]
pub struct GapReport<T: Scalar = f64> {
    pub per_od: Vec<OdGap<T>>,
    pub aggregate_rel_gap: T,
}

/// Audits a solution against the user-equilibrium condition.
///
/// A path counts as used when each of its links carries at least a
/// demand-scaled epsilon of flow; the per-OD report compares the cheapest
/// used path with the cheapest path overall. The aggregate gap instead uses
/// exact shortest-path costs, so it does not depend on path enumeration.
pub fn wardrop_gap<T: Scalar>(
    net: &Network<T>,
    flows: &[T],
    od: &OdMatrix<T>,
    max_paths: usize,
) -> Result<GapReport<T>, SolveError> {
    if flows.len() != net.link_count() {
        return Err(SolveError::Domain(format!(
            "{} flows given for {} links",
            flows.len(),
            net.link_count()
        )));
    }
    let times: Vec<T> = net
        .links()
        .iter()
        .zip(flows)
        .map(|(link, &x)| link.travel_time_at(x))
        .collect();
    let used_eps = T::from(1e-9).unwrap() * od.total().max(T::one());

    let mut per_od = Vec::with_capacity(od.len());
    let mut total_cost = T::zero();
    for (e, &x) in flows.iter().enumerate() {
        total_cost += x * times[e];
    }
    let mut shortest_cost = T::zero();

    let mut tree = None;
    let mut tree_origin = usize::MAX;
    for (origin, dest, demand) in od.iter() {
        if origin != tree_origin {
            tree = Some(dijkstra(net, &times, origin, None, None));
            tree_origin = origin;
        }
        let dist = tree.as_ref().unwrap().dist[dest];
        if !dist.is_finite() {
            return Err(SolveError::Infeasible { origin, dest });
        }
        shortest_cost += demand * dist;

        let paths = enumerate_paths(net, origin, dest, max_paths)?;
        let mut min_cost = T::infinity();
        let mut min_used_cost = T::infinity();
        for path in &paths {
            let cost = path.cost(&times);
            min_cost = min_cost.min(cost);
            let used = path
                .links
                .iter()
                .all(|&e| flows[e] >= used_eps);
            if used {
                min_used_cost = min_used_cost.min(cost);
            }
        }
        // The enumeration is capped, so the flow-carrying paths may all be
        // outside it; report a zero gap rather than a fictitious one.
        if !min_used_cost.is_finite() {
            min_used_cost = min_cost;
        }
        per_od.push(OdGap {
            origin,
            dest,
            min_cost,
            min_used_cost,
            gap: min_used_cost - min_cost,
        });
    }

    let aggregate_rel_gap = if total_cost > T::zero() {
        (total_cost - shortest_cost) / total_cost
    } else {
        T::zero()
    };
    Ok(GapReport {
        per_od,
        aggregate_rel_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fw::{solve_ue_frank_wolfe, SolverOptions};
    use netcore::{Link, Node};

    fn two_parallel() -> Network {
        let nodes = (0..2)
            .map(|i| Node {
                id: i,
                x: 0.0,
                y: 0.0,
            })
            .collect();
        let links = vec![
            Link {
                from: 0,
                to: 1,
                free_flow_time: 1.0,
                capacity: 1.0,
                bpr_b: 0.15,
                bpr_power: 4.0,
            },
            Link {
                from: 0,
                to: 1,
                free_flow_time: 1.0,
                capacity: 2.0,
                bpr_b: 0.15,
                bpr_power: 4.0,
            },
        ];
        Network::new(nodes, links).unwrap()
    }

    #[test]
    fn equilibrium_has_negligible_gap() {
        let net = two_parallel();
        let od = OdMatrix::from_entries([(0, 1, 3.0)]).unwrap();
        let sol = solve_ue_frank_wolfe(&net, &od, &SolverOptions::default()).unwrap();
        let report = wardrop_gap(&net, &sol.flows, &od, 10).unwrap();
        assert!(report.aggregate_rel_gap.abs() < 1e-6);
        assert!(report.per_od[0].gap.abs() < 1e-4);
    }

    #[test]
    fn forcing_the_slow_path_shows_a_gap() {
        let net = two_parallel();
        let od = OdMatrix::from_entries([(0, 1, 3.0)]).unwrap();
        // All demand on link 0, whose time blows up; link 1 stays free-flow.
        let forced = vec![3.0, 0.0];
        let report = wardrop_gap(&net, &forced, &od, 10).unwrap();
        assert!(report.aggregate_rel_gap > 0.1);
        assert!(report.per_od[0].gap > 0.1);
    }
}
