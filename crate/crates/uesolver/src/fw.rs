use netcore::{Network, OdMatrix, Scalar};

use crate::assign::all_or_nothing;
use crate::error::SolveError;

/// Stopping rules for the Frank-Wolfe solver.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions<T: Scalar = f64> {
    /// Threshold on the normalized flow change between iterates.
    pub convergence_threshold: T,
    pub max_iterations: usize,
    /// Interval width at which the bisection line search stops.
    pub line_search_tol: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            convergence_threshold: T::from(1e-5).unwrap(),
            max_iterations: 50_000,
            line_search_tol: T::from(1e-8).unwrap(),
        }
    }
}

/// One Frank-Wolfe iteration of the convergence trace.
#[derive(Clone, Copy, Debug)]
pub struct FwTraceRow<T: Scalar = f64> {
    pub iter: usize,
    /// Objective value after the iteration's flow update.
    pub beckmann: T,
    /// Euclidean norm of the update divided by the previous total flow.
    pub rel_change: T,
    /// Relative optimality gap of the linearized subproblem before the
    /// update; telemetry only, never a stopping rule.
    pub rel_gap: T,
}

/// Equilibrium link flows with convergence telemetry.
#[derive(Clone, Debug)]
pub struct UeSolution<T: Scalar = f64> {
    pub flows: Vec<T>,
    /// Flow-capacity ratio per link.
    pub ratios: Vec<T>,
    pub beckmann_value: T,
    pub iterations: usize,
    pub final_rel_change: T,
    pub converged: bool,
    pub trace: Vec<FwTraceRow<T>>,
}

/// Beckmann objective of a flow vector: the sum over links of the
/// travel-time integral from zero to the link's flow.
pub fn beckmann_objective<T: Scalar>(net: &Network<T>, flows: &[T]) -> T {
    net.links()
        .iter()
        .zip(flows)
        .map(|(link, &x)| link.cost_integral_at(x))
        .sum()
}

/// Exact line search between flow vectors `x` and `y`: returns the step
/// `lambda` in [0, 1] minimizing the Beckmann objective along the segment.
///
/// The directional derivative `g(lambda) = sum_e t_e(x + lambda d) d_e`
/// is non-decreasing because the objective is convex, so the minimizer is
/// where `g` crosses zero, clamped to an endpoint when `g` keeps one sign.
pub fn bisection_line_search<T: Scalar>(net: &Network<T>, x: &[T], y: &[T], tol: T) -> T {
    debug_assert_eq!(x.len(), net.link_count());
    debug_assert_eq!(y.len(), net.link_count());
    let g = |lambda: T| -> T {
        net.links()
            .iter()
            .enumerate()
            .map(|(e, link)| {
                let d = y[e] - x[e];
                let flow = (T::one() - lambda) * x[e] + lambda * y[e];
                link.travel_time_at(flow) * d
            })
            .sum()
    };
    if g(T::zero()) >= T::zero() {
        return T::zero();
    }
    if g(T::one()) <= T::zero() {
        return T::one();
    }
    let mut lo = T::zero();
    let mut hi = T::one();
    let half = T::from(0.5).unwrap();
    while hi - lo > tol {
        let mid = (lo + hi) * half;
        if g(mid) > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) * half
}

/// Solves user equilibrium with Frank-Wolfe: all-or-nothing assignment at
/// current times for the direction, exact line search for the step.
///
/// Infeasible demand is reported before any iteration. The returned trace
/// holds one row per iteration with the objective, the normalized flow
/// change, and the relative optimality gap.
pub fn solve_ue_frank_wolfe<T: Scalar>(
    net: &Network<T>,
    od: &OdMatrix<T>,
    opts: &SolverOptions<T>,
) -> Result<UeSolution<T>, SolveError> {
    if !(opts.convergence_threshold > T::zero()) {
        return Err(SolveError::Domain(
            "convergence threshold must be positive".into(),
        ));
    }
    if opts.max_iterations == 0 {
        return Err(SolveError::Domain("max_iterations must be at least 1".into()));
    }

    let free_flow: Vec<T> = net.links().iter().map(|l| l.free_flow_time).collect();
    let mut x = all_or_nothing(net, &free_flow, od)?;
    let mut times = vec![T::zero(); net.link_count()];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut final_rel_change = T::zero();

    for iter in 1..=opts.max_iterations {
        for (e, link) in net.links().iter().enumerate() {
            times[e] = link.travel_time_at(x[e]);
        }
        let y = all_or_nothing(net, &times, od)?;

        let mut total_cost = T::zero();
        let mut aon_cost = T::zero();
        for e in 0..x.len() {
            total_cost += x[e] * times[e];
            aon_cost += y[e] * times[e];
        }
        let rel_gap = if total_cost > T::zero() {
            (total_cost - aon_cost) / total_cost
        } else {
            T::zero()
        };

        let lambda = bisection_line_search(net, &x, &y, opts.line_search_tol);

        let mut diff_sq = T::zero();
        let mut denom = T::zero();
        for e in 0..x.len() {
            let new = (T::one() - lambda) * x[e] + lambda * y[e];
            let d = new - x[e];
            diff_sq += d * d;
            denom += x[e];
            x[e] = new;
        }
        let rel_change = if denom > T::zero() {
            diff_sq.sqrt() / denom
        } else {
            T::zero()
        };

        let beckmann = beckmann_objective(net, &x);
        if !beckmann.is_finite() {
            return Err(SolveError::Numeric {
                iteration: iter,
                msg: "Beckmann objective is not finite".into(),
            });
        }
        trace.push(FwTraceRow {
            iter,
            beckmann,
            rel_change,
            rel_gap,
        });
        iterations = iter;
        final_rel_change = rel_change;
        if rel_change < opts.convergence_threshold {
            converged = true;
            break;
        }
    }

    let ratios = net
        .links()
        .iter()
        .zip(&x)
        .map(|(link, &flow)| flow / link.capacity)
        .collect();
    let beckmann_value = beckmann_objective(net, &x);
    Ok(UeSolution {
        flows: x,
        ratios,
        beckmann_value,
        iterations,
        final_rel_change,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use netcore::{Link, Node};

    pub(crate) fn two_parallel() -> Network {
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
    fn degenerate_direction_returns_zero() {
        let net = two_parallel();
        let x = vec![1.0, 2.0];
        assert_eq!(bisection_line_search(&net, &x, &x, 1e-8), 0.0);
    }

    #[test]
    fn uphill_direction_clamps_to_zero() {
        let net = two_parallel();
        // x is already the equilibrium; moving everything to link 1 is uphill.
        let x = vec![1.0, 2.0];
        let y = vec![3.0, 0.0];
        assert_eq!(bisection_line_search(&net, &x, &y, 1e-8), 0.0);
    }

    #[test]
    fn parallel_transfer_step_is_two_thirds() {
        let net = two_parallel();
        let x = vec![3.0, 0.0];
        let y = vec![0.0, 3.0];
        let lambda = bisection_line_search(&net, &x, &y, 1e-10);
        assert!((lambda - 2.0 / 3.0).abs() < 1e-6, "lambda = {lambda}");
    }

    #[test]
    fn single_link_converges_immediately() {
        let nodes = (0..2)
            .map(|i| Node {
                id: i,
                x: 0.0,
                y: 0.0,
            })
            .collect();
        let links = vec![Link {
            from: 0,
            to: 1,
            free_flow_time: 1.0,
            capacity: 4.0,
            bpr_b: 0.15,
            bpr_power: 4.0,
        }];
        let net = Network::new(nodes, links).unwrap();
        let od = OdMatrix::<f64>::from_entries([(0, 1, 7.0)]).unwrap();
        let sol = solve_ue_frank_wolfe(&net, &od, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.flows, vec![7.0]);
        assert!((sol.ratios[0] - 7.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_parallel_links_equalize_costs() {
        let net = two_parallel();
        let od = OdMatrix::from_entries([(0, 1, 3.0)]).unwrap();
        let sol = solve_ue_frank_wolfe(&net, &od, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.flows[0] - 1.0).abs() < 1e-3, "flows = {:?}", sol.flows);
        assert!((sol.flows[1] - 2.0).abs() < 1e-3);
        let t0 = net.link(0).travel_time_at(sol.flows[0]);
        let t1 = net.link(1).travel_time_at(sol.flows[1]);
        assert!((t0 - t1).abs() < 1e-4);
        assert!((t0 - 1.15).abs() < 1e-3);
    }

    #[test]
    fn empty_demand_converges_to_zero_flow() {
        let net = two_parallel();
        let od = OdMatrix::new();
        let sol = solve_ue_frank_wolfe(&net, &od, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.flows, vec![0.0, 0.0]);
        assert_eq!(sol.beckmann_value, 0.0);
    }

    #[test]
    fn infeasible_demand_fails_before_iterating() {
        let net = two_parallel();
        let od = OdMatrix::from_entries([(1, 0, 1.0)]).unwrap();
        assert!(matches!(
            solve_ue_frank_wolfe(&net, &od, &SolverOptions::default()),
            Err(SolveError::Infeasible { .. })
        ));
    }

    #[test]
    fn objective_descends_along_the_trace() {
        let net = two_parallel();
        let od = OdMatrix::from_entries([(0, 1, 3.0)]).unwrap();
        let sol = solve_ue_frank_wolfe(&net, &od, &SolverOptions::default()).unwrap();
        for pair in sol.trace.windows(2) {
            assert!(pair[1].beckmann <= pair[0].beckmann + 1e-10);
        }
    }
}
