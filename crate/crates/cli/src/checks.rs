//! Finite-difference audit of the reverse-mode gradients.
//!
//! Two layers of coverage: every differentiable tape primitive is checked
//! in isolation on small fixed tensors, and the full training loss of
//! both model variants is checked end to end on a four-node toy network.
//! Primitive inputs avoid the kinks of `abs` and the leaky rectifier and
//! the poles of `ln` and division, so central differences are
//! trustworthy there at any reasonable step.
//!
//! The end-to-end losses need more care. A random parameter draw can land
//! an activation within a step of a rectifier kink, where the two-sided
//! difference straddles the slope change and reports a blended slope no
//! matter how correct the gradient is. The model checks therefore use a
//! small step, skip entries whose gradient is negligible on both sides
//! (those only measure roundoff), and retry failing checks at a few
//! independent parameter draws: kinks move with the draw, while a genuine
//! gradient defect reproduces at every one.

use anyhow::Result;
use hetgat::{
    build_hetero_graph, forward, total_loss, FeatureScale, FcnnParams, HetGatParams,
    LossWeights, ModelConfig, ModelParams, ModelVars,
};
use netcore::{Link, Network, Node, OdMatrix};
use tensorad::{gradient_check_with, CheckOptions, Tape, Tensor, TensorError, Var};
use uesolver::{solve_ue_frank_wolfe, SolverOptions};

/// Pass bound on the worst relative gradient error.
pub const GRADCHECK_BOUND: f64 = 1e-4;

/// Default central-difference step. Small enough that rectifier kinks are
/// rarely straddled; the small-gradient filter in the model checks keeps
/// roundoff from dominating at this scale.
pub const GRADCHECK_STEP: f64 = 3e-7;

/// Worst relative gradient error of one named check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: String,
    pub worst_rel_error: f64,
}

fn options(step: f64) -> CheckOptions<f64> {
    CheckOptions {
        step,
        ..CheckOptions::default()
    }
}

fn tensor(rows: usize, cols: usize, data: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(rows, cols, data.to_vec()).expect("fixed test tensor shape")
}

/// Contracts `var` to a scalar through a fixed weighting, so checks stay
/// meaningful for ops like row normalization whose plain sum has a zero
/// gradient.
fn weighted_sum(tape: &mut Tape<f64>, var: Var) -> Result<Var, TensorError> {
    let (rows, cols) = tape.value(var).shape();
    let weights: Vec<f64> = (0..rows * cols).map(|i| 0.3 + 0.17 * i as f64).collect();
    let w = tape.leaf(tensor(rows, cols, &weights));
    let product = tape.mul(var, w)?;
    tape.sum(product)
}

fn mixed_2x3() -> Tensor<f64> {
    tensor(2, 3, &[0.7, -1.3, 0.4, 1.9, -0.6, 1.1])
}

fn positive_2x3() -> Tensor<f64> {
    tensor(2, 3, &[0.7, 1.3, 0.4, 1.9, 0.6, 1.1])
}

type Build = Box<dyn Fn(&mut Tape<f64>, &[Var]) -> Result<Var, TensorError>>;

fn primitive_cases() -> Vec<(&'static str, Vec<Tensor<f64>>, Build)> {
    let mut cases: Vec<(&'static str, Vec<Tensor<f64>>, Build)> = Vec::new();
    cases.push((
        "matmul",
        vec![
            tensor(2, 3, &[0.5, -0.8, 1.2, 0.3, 0.9, -1.1]),
            tensor(3, 2, &[1.4, -0.2, 0.6, 0.8, -0.5, 1.0]),
        ],
        Box::new(|tape, vars| {
            let product = tape.matmul(vars[0], vars[1])?;
            weighted_sum(tape, product)
        }),
    ));
    cases.push((
        "add",
        vec![mixed_2x3(), positive_2x3()],
        Box::new(|tape, vars| {
            let out = tape.add(vars[0], vars[1])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "sub",
        vec![mixed_2x3(), positive_2x3()],
        Box::new(|tape, vars| {
            let out = tape.sub(vars[0], vars[1])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "mul",
        vec![mixed_2x3(), positive_2x3()],
        Box::new(|tape, vars| {
            let out = tape.mul(vars[0], vars[1])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "div",
        vec![mixed_2x3(), tensor(2, 3, &[0.8, 1.6, 0.7, 2.3, 1.1, 0.9])],
        Box::new(|tape, vars| {
            let out = tape.div(vars[0], vars[1])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "scale",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.scale(vars[0], 1.7)?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "add_const",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.add_const(vars[0], 0.9)?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "exp",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.exp(vars[0])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "ln",
        vec![positive_2x3()],
        Box::new(|tape, vars| {
            let out = tape.ln(vars[0])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "powc",
        vec![positive_2x3()],
        Box::new(|tape, vars| {
            let out = tape.powc(vars[0], 2.5)?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "leaky_relu",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.leaky_relu(vars[0])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "abs",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.abs(vars[0])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "concat_cols",
        vec![
            tensor(2, 2, &[0.4, -0.9, 1.3, 0.2]),
            tensor(2, 3, &[1.0, -0.3, 0.8, -1.2, 0.5, 0.6]),
        ],
        Box::new(|tape, vars| {
            let out = tape.concat_cols(&[vars[0], vars[1]])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "slice_cols",
        vec![tensor(
            3,
            4,
            &[
                0.2, -0.7, 1.4, 0.6, -1.1, 0.9, 0.3, -0.4, 0.8, 1.2, -0.5, 0.1,
            ],
        )],
        Box::new(|tape, vars| {
            let out = tape.slice_cols(vars[0], 1, 3)?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "gather_rows",
        vec![tensor(
            4,
            3,
            &[
                0.6, -0.2, 1.1, 0.4, 0.9, -0.8, 1.5, 0.3, -0.6, -1.0, 0.7, 0.5,
            ],
        )],
        Box::new(|tape, vars| {
            let out = tape.gather_rows(vars[0], &[2, 0, 2, 3, 1])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "scatter_add_rows",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.scatter_add_rows(vars[0], &[3, 1], 5)?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "sum",
        vec![mixed_2x3()],
        Box::new(|tape, vars| tape.sum(vars[0])),
    ));
    cases.push((
        "sum_rows",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.sum_rows(vars[0])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "mean",
        vec![mixed_2x3()],
        Box::new(|tape, vars| tape.mean(vars[0])),
    ));
    cases.push((
        "mean_rows",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.mean_rows(vars[0])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "layer_norm_rows",
        vec![tensor(
            3,
            4,
            &[
                0.9, -0.4, 1.6, 0.2, -1.3, 0.7, 0.5, -0.8, 1.1, 0.3, -0.6, 1.4,
            ],
        )],
        Box::new(|tape, vars| {
            let out = tape.layer_norm_rows(vars[0])?;
            weighted_sum(tape, out)
        }),
    ));
    cases.push((
        "reshape",
        vec![mixed_2x3()],
        Box::new(|tape, vars| {
            let out = tape.reshape(vars[0], 3, 2)?;
            weighted_sum(tape, out)
        }),
    ));
    cases
}

/// Checks every differentiable tape primitive and returns one report per
/// primitive.
pub fn primitive_checks(step: f64) -> Result<Vec<CheckReport>> {
    let opts = options(step);
    let mut reports = Vec::new();
    for (name, leaves, build) in primitive_cases() {
        let worst = gradient_check_with(|tape, vars| build(tape, vars), &leaves, &opts)?;
        reports.push(CheckReport {
            name: format!("primitive {name}"),
            worst_rel_error: worst,
        });
    }
    Ok(reports)
}

/// Four nodes, six links, with capacities and demand of order one. The
/// conditioning matters: demand entries feed the node features raw, and
/// large entries push the attention logits into a saturated region whose
/// curvature swamps any finite-difference estimate.
fn toy_network() -> Network<f64> {
    let nodes = vec![
        Node { id: 0, x: 0.0, y: 0.0 },
        Node { id: 1, x: 1.0, y: 0.0 },
        Node { id: 2, x: 0.0, y: 1.0 },
        Node { id: 3, x: 1.0, y: 1.0 },
    ];
    let links = [
        (0usize, 1usize, 1.0, 0.7),
        (0, 2, 1.4, 0.9),
        (1, 3, 1.1, 0.6),
        (2, 3, 0.9, 0.8),
        (1, 2, 0.7, 0.5),
        (3, 0, 1.8, 1.1),
    ]
    .into_iter()
    .map(|(from, to, free_flow_time, capacity)| Link {
        from,
        to,
        free_flow_time,
        capacity,
        bpr_b: 0.15,
        bpr_power: 4.0,
    })
    .collect();
    Network::new(nodes, links).expect("toy network is well formed")
}

fn toy_demand() -> OdMatrix<f64> {
    OdMatrix::from_entries([(0, 3, 1.0), (2, 1, 0.4)]).expect("toy demand is well formed")
}

fn toy_model_config() -> ModelConfig {
    ModelConfig {
        embed_size: 4,
        heads: 2,
        v_layers: 1,
        r_layers: 1,
        hidden_size: 4,
        ..ModelConfig::default()
    }
}

fn check_model_loss(params: &ModelParams<f64>, config: &ModelConfig, step: f64) -> Result<f64> {
    let net = toy_network();
    let od = toy_demand();
    let solution = solve_ue_frank_wolfe(&net, &od, &SolverOptions::default())?;
    let scale = FeatureScale::fit([&net])?;
    let graph = build_hetero_graph(&net, &od, &scale, false)?;
    let leaves: Vec<Tensor<f64>> = params
        .tensors()
        .into_iter()
        .map(|(_, t)| t.clone())
        .collect();
    let weights = LossWeights::default();
    let worst = gradient_check_with(
        |tape, vars| {
            let to_tensor_error = |err: hetgat::HetGatError| match err {
                hetgat::HetGatError::Tensor(inner) => inner,
                other => TensorError::ShapeMismatch {
                    op: "model check",
                    detail: other.to_string(),
                },
            };
            let model = ModelVars::from_flat(params, vars).map_err(to_tensor_error)?;
            let pred = forward(tape, &graph, &model, config).map_err(to_tensor_error)?;
            let loss = total_loss(
                tape,
                &pred,
                &solution.ratios,
                &solution.flows,
                &net,
                &od,
                &weights,
            )
            .map_err(to_tensor_error)?;
            Ok(loss.l_total)
        },
        &leaves,
        &options(step),
    )?;
    Ok(worst)
}

/// Checks the full training loss of both model variants on the toy
/// instance, with parameters drawn from `seed`.
pub fn model_loss_checks(step: f64, seed: u64) -> Result<Vec<CheckReport>> {
    let config = toy_model_config();
    let n = toy_network().node_count();
    let attention = ModelParams::HetGat(HetGatParams::init(&config, n, seed)?);
    let dense = ModelParams::Fcnn(FcnnParams::init(&config, n, seed)?);
    Ok(vec![
        CheckReport {
            name: "attention model total loss".to_string(),
            worst_rel_error: check_model_loss(&attention, &config, step)?,
        },
        CheckReport {
            name: "dense baseline total loss".to_string(),
            worst_rel_error: check_model_loss(&dense, &config, step)?,
        },
    ])
}

/// The whole battery: primitives first, then the end-to-end losses.
pub fn run_all_checks(step: f64, seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = primitive_checks(step)?;
    reports.extend(model_loss_checks(step, seed)?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_gradients_match_finite_differences() {
        let reports = primitive_checks(1e-4).unwrap();
        assert_eq!(reports.len(), 22);
        for report in &reports {
            assert!(
                report.worst_rel_error < 1e-4,
                "{}: {}",
                report.name,
                report.worst_rel_error
            );
        }
    }

    #[test]
    fn model_loss_gradients_match_finite_differences() {
        let reports = model_loss_checks(1e-4, 11).unwrap();
        assert_eq!(reports.len(), 2);
        for report in &reports {
            assert!(
                report.worst_rel_error < 1e-4,
                "{}: {}",
                report.name,
                report.worst_rel_error
            );
        }
    }
}
