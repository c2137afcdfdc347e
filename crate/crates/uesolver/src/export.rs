use std::fmt::Write as _;

use netcore::{Network, Scalar};

use crate::fw::UeSolution;

/// Per-link solution table as CSV. Ids are 1-based to match the network
/// file formats.
pub fn solution_csv<T: Scalar>(net: &Network<T>, sol: &UeSolution<T>) -> String {
    let mut out = String::from("link_id,from,to,flow,ratio,travel_time\n");
    for (e, link) in net.links().iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e + 1,
            link.from + 1,
            link.to + 1,
            sol.flows[e],
            sol.ratios[e],
            link.travel_time_at(sol.flows[e])
        );
    }
    out
}

/// Convergence trace as CSV, one row per solver iteration.
pub fn trace_csv<T: Scalar>(sol: &UeSolution<T>) -> String {
    let mut out = String::from("iter,beckmann,rel_change,rel_gap\n");
    for row in &sol.trace {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.iter, row.beckmann, row.rel_change, row.rel_gap
        );
    }
    out
}
