use netcore::{Network, OdMatrix, Scalar};
use tensorad::{Tape, Tensor, Var};

use crate::config::LossWeights;
use crate::error::HetGatError;
use crate::model::TapePrediction;

/// Supervised loss terms, still on the tape.
#[derive(Clone, Copy, Debug)]
pub struct SupervisedLoss {
    /// Mean absolute error of the flow-capacity ratios.
    pub l_alpha: Var,
    /// Mean absolute error of the flows.
    pub l_flow: Var,
    /// Unweighted sum of the two.
    pub l_supervised: Var,
}

/// Conservation loss and the per-node residuals it sums.
#[derive(Clone, Copy, Debug)]
pub struct ConservationLoss {
    pub l_conservation: Var,
    /// Per-node `inflow - outflow - demand imbalance`, one row per node.
    pub residuals: Var,
}

/// All loss terms plus their weighted total.
#[derive(Clone, Copy, Debug)]
pub struct TotalLoss {
    pub l_alpha: Var,
    pub l_flow: Var,
    pub l_conservation: Var,
    pub l_total: Var,
}

fn column<T: Scalar>(tape: &mut Tape<T>, values: &[T]) -> Result<Var, HetGatError> {
    Ok(tape.leaf(Tensor::from_vec(values.len(), 1, values.to_vec())?))
}

fn mean_abs_error<T: Scalar>(
    tape: &mut Tape<T>,
    predicted: Var,
    truth: Var,
) -> Result<Var, HetGatError> {
    let diff = tape.sub(predicted, truth)?;
    let magnitude = tape.abs(diff)?;
    Ok(tape.mean(magnitude)?)
}

/// Mean absolute errors of predicted ratios and flows against ground
/// truth.
pub fn supervised_loss<T: Scalar>(
    tape: &mut Tape<T>,
    pred: &TapePrediction,
    true_ratios: &[T],
    true_flows: &[T],
) -> Result<SupervisedLoss, HetGatError> {
    let edges = tape.value(pred.alpha).rows();
    if true_ratios.len() != edges || true_flows.len() != edges {
        return Err(HetGatError::Shape(format!(
            "{} predictions against {} ratios and {} flows",
            edges,
            true_ratios.len(),
            true_flows.len()
        )));
    }
    let ratio_truth = column(tape, true_ratios)?;
    let flow_truth = column(tape, true_flows)?;
    let l_alpha = mean_abs_error(tape, pred.alpha, ratio_truth)?;
    let l_flow = mean_abs_error(tape, pred.flow, flow_truth)?;
    let l_supervised = tape.add(l_alpha, l_flow)?;
    Ok(SupervisedLoss {
        l_alpha,
        l_flow,
        l_supervised,
    })
}

/// Demand imbalance per node: total demand arriving minus total demand
/// departing. A flow vector conserves exactly when each node's
/// inflow - outflow matches this.
pub fn demand_imbalance<T: Scalar>(n_nodes: usize, od_true: &OdMatrix<T>) -> Tensor<T> {
    let mut delta = Tensor::zeros(n_nodes, 1);
    for (o, d, q) in od_true.iter() {
        delta.set(d, 0, delta.get(d, 0) + q);
        delta.set(o, 0, delta.get(o, 0) - q);
    }
    delta
}

/// Sum over nodes of the absolute conservation residual of the predicted
/// flows, with the true demand as source and sink terms.
pub fn conservation_loss<T: Scalar>(
    tape: &mut Tape<T>,
    flow: Var,
    network: &Network<T>,
    od_true: &OdMatrix<T>,
) -> Result<ConservationLoss, HetGatError> {
    let n = network.node_count();
    let edges = tape.value(flow).rows();
    if edges != network.link_count() {
        return Err(HetGatError::Shape(format!(
            "{edges} predicted flows for {} links",
            network.link_count()
        )));
    }
    if od_true.max_node().is_some_and(|node| node >= n) {
        return Err(HetGatError::Shape(format!(
            "demand references node {} but the network has {n} nodes",
            od_true.max_node().unwrap()
        )));
    }
    let from: Vec<usize> = network.links().iter().map(|l| l.from).collect();
    let to: Vec<usize> = network.links().iter().map(|l| l.to).collect();
    let inflow = tape.scatter_add_rows(flow, &to, n)?;
    let outflow = tape.scatter_add_rows(flow, &from, n)?;
    let delta = tape.leaf(demand_imbalance(n, od_true));
    let net_flow = tape.sub(inflow, outflow)?;
    let residuals = tape.sub(net_flow, delta)?;
    let magnitude = tape.abs(residuals)?;
    let l_conservation = tape.sum(magnitude)?;
    Ok(ConservationLoss {
        l_conservation,
        residuals,
    })
}

/// Weighted sum of the ratio, flow, and conservation losses.
pub fn total_loss<T: Scalar>(
    tape: &mut Tape<T>,
    pred: &TapePrediction,
    true_ratios: &[T],
    true_flows: &[T],
    network: &Network<T>,
    od_true: &OdMatrix<T>,
    weights: &LossWeights,
) -> Result<TotalLoss, HetGatError> {
    let supervised = supervised_loss(tape, pred, true_ratios, true_flows)?;
    let conservation = conservation_loss(tape, pred.flow, network, od_true)?;
    let wa = tape.scale(supervised.l_alpha, T::from(weights.alpha).unwrap())?;
    let wf = tape.scale(supervised.l_flow, T::from(weights.flow).unwrap())?;
    let wc = tape.scale(
        conservation.l_conservation,
        T::from(weights.conservation).unwrap(),
    )?;
    let partial = tape.add(wa, wf)?;
    let l_total = tape.add(partial, wc)?;
    Ok(TotalLoss {
        l_alpha: supervised.l_alpha,
        l_flow: supervised.l_flow,
        l_conservation: conservation.l_conservation,
        l_total,
    })
}
