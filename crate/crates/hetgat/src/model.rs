use netcore::Scalar;
use tensorad::{Tape, Tensor, TensorError, Var};

use crate::config::ModelConfig;
use crate::error::HetGatError;
use crate::graph::HeteroGraph;
use crate::params::{AffineVars, FcnnVars, HetGatVars, LayerVars, ModelVars};

/// Per-road-edge outputs still on the tape, for loss construction.
#[derive(Clone, Copy, Debug)]
pub struct TapePrediction {
    /// Predicted flow-capacity ratio per edge, one column.
    pub alpha: Var,
    /// Predicted flow per edge, `alpha * capacity`.
    pub flow: Var,
}

/// Per-road-edge predictions as plain values.
#[derive(Clone, Debug)]
pub struct Prediction<T: Scalar = f64> {
    pub alpha: Vec<T>,
    pub flow: Vec<T>,
}

fn affine<T: Scalar>(tape: &mut Tape<T>, x: Var, layer: &AffineVars) -> Result<Var, TensorError> {
    let y = tape.matmul(x, layer.weight)?;
    tape.add(y, layer.bias)
}

/// Single dense layer with the leaky activation.
fn ffn<T: Scalar>(tape: &mut Tape<T>, x: Var, layer: &AffineVars) -> Result<Var, TensorError> {
    let y = affine(tape, x, layer)?;
    tape.leaky_relu(y)
}

/// Runs the raw node features through the preprocessing MLP, producing
/// one embedding row per node.
pub fn preprocess_embed<T: Scalar>(
    tape: &mut Tape<T>,
    graph: &HeteroGraph<T>,
    layers: &[AffineVars],
) -> Result<Var, HetGatError> {
    let first = layers.first().ok_or_else(|| {
        HetGatError::Shape("preprocessing MLP has no layers".to_string())
    })?;
    let expected = tape.value(first.weight).rows();
    if graph.features.cols() != expected {
        return Err(HetGatError::Shape(format!(
            "feature width {} does not match the preprocessing input width {expected} \
             (model sized for {} nodes)",
            graph.features.cols(),
            expected.saturating_sub(2)
        )));
    }
    let mut x = tape.leaf(graph.features.clone());
    for layer in layers {
        x = ffn(tape, x, layer)?;
    }
    Ok(x)
}

/// Per-edge multiplier of the scaled query-key product. Demand edges
/// learn it from the endpoint embeddings; road edges take the sum of
/// their normalized physical features as a constant.
enum EdgeWeight<'a, T: Scalar> {
    Learned,
    Features(&'a Tensor<T>),
}

/// Shifts attention logits by their per-source maximum before
/// exponentiation. The shift is a constant leaf, so the normalized
/// weights and their gradients are unchanged while the exponentials stay
/// bounded.
fn stabilized_exp<T: Scalar>(
    tape: &mut Tape<T>,
    logit: Var,
    from: &[usize],
    n_nodes: usize,
) -> Result<Var, TensorError> {
    let values = tape.value(logit);
    let mut group_max = vec![T::neg_infinity(); n_nodes];
    for (e, &u) in from.iter().enumerate() {
        group_max[u] = group_max[u].max(values.get(e, 0));
    }
    let shift = Tensor::from_vec(
        from.len(),
        1,
        from.iter().map(|&u| group_max[u]).collect(),
    )?;
    let shift = tape.leaf(shift);
    let centered = tape.sub(logit, shift)?;
    tape.exp(centered)
}

/// One attention head: returns the unnormalized scores (one row per
/// edge) and the normalized aggregate message per node.
fn head_messages<T: Scalar>(
    tape: &mut Tape<T>,
    x_head: Var,
    from: &[usize],
    to: &[usize],
    head: &crate::params::HeadVars,
    weighting: &EdgeWeight<'_, T>,
    guard: Var,
) -> Result<(Var, Var), HetGatError> {
    let n_nodes = tape.value(x_head).rows();
    let d = tape.value(head.w_q).cols();
    let q = tape.matmul(x_head, head.w_q)?;
    let k = tape.matmul(x_head, head.w_k)?;
    let v = tape.matmul(x_head, head.w_v)?;

    let q_edge = tape.gather_rows(q, from)?;
    let k_edge = tape.gather_rows(k, to)?;
    let qk = tape.mul(q_edge, k_edge)?;
    let dot = tape.sum_rows(qk)?;
    let scaled = tape.scale(dot, T::one() / T::from(d).unwrap().sqrt())?;

    let weight = match weighting {
        EdgeWeight::Learned => {
            let beta = head.beta.as_ref().ok_or_else(|| {
                HetGatError::Shape("head has no adaptive-weight layer".to_string())
            })?;
            let x_from = tape.gather_rows(x_head, from)?;
            let x_to = tape.gather_rows(x_head, to)?;
            let pair = tape.concat_cols(&[x_from, x_to])?;
            ffn(tape, pair, beta)?
        }
        EdgeWeight::Features(beta) => {
            let sums = (0..beta.rows()).map(|e| beta.get(e, 0) + beta.get(e, 1)).collect();
            tape.leaf(Tensor::from_vec(beta.rows(), 1, sums)?)
        }
    };
    let logit = tape.mul(scaled, weight)?;
    let score = stabilized_exp(tape, logit, from, n_nodes)?;

    let v_edge = tape.gather_rows(v, to)?;
    let weighted = tape.mul(score, v_edge)?;
    let numerator = tape.scatter_add_rows(weighted, from, n_nodes)?;
    let denominator = tape.scatter_add_rows(score, from, n_nodes)?;
    let denominator = tape.add(denominator, guard)?;
    let message = tape.div(numerator, denominator)?;
    Ok((score, message))
}

/// Shared body of both encoder layers: attention per head over the given
/// edge set, feed-forward plus layer norm on the message, residual
/// update masked to nodes that have at least one outgoing edge.
fn encoder_layer<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    from: &[usize],
    to: &[usize],
    layer: &LayerVars,
    weighting: EdgeWeight<'_, T>,
) -> Result<Var, HetGatError> {
    let (n_nodes, width) = tape.value(x).shape();
    let heads = layer.heads.len();
    if heads == 0 || width % heads != 0 {
        return Err(HetGatError::Shape(format!(
            "embedding width {width} is not divisible into {heads} heads"
        )));
    }
    let d = width / heads;

    let mut has_out = Tensor::zeros(n_nodes, 1);
    for &u in from {
        has_out.set(u, 0, T::one());
    }
    let guard_values = has_out.map(|ind| T::one() - ind);
    let indicator = tape.leaf(has_out);
    let guard = tape.leaf(guard_values);

    let mut updated = Vec::with_capacity(heads);
    for (i, head) in layer.heads.iter().enumerate() {
        let x_head = tape.slice_cols(x, i * d, (i + 1) * d)?;
        let (_, message) = head_messages(tape, x_head, from, to, head, &weighting, guard)?;
        let transformed = ffn(tape, message, &head.z)?;
        let normed = tape.layer_norm(transformed, head.ln_gain, head.ln_offset)?;
        let masked = tape.mul(normed, indicator)?;
        updated.push(tape.add(x_head, masked)?);
    }
    Ok(tape.concat_cols(&updated)?)
}

/// Attention update over the demand edges with the learned adaptive edge
/// weight.
pub fn v_encoder_layer<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    graph: &HeteroGraph<T>,
    layer: &LayerVars,
) -> Result<Var, HetGatError> {
    encoder_layer(
        tape,
        x,
        &graph.virtual_from,
        &graph.virtual_to,
        layer,
        EdgeWeight::Learned,
    )
}

/// Attention update over the road edges, weighted by the sum of the
/// normalized physical edge features.
pub fn r_encoder_layer<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    graph: &HeteroGraph<T>,
    layer: &LayerVars,
) -> Result<Var, HetGatError> {
    encoder_layer(
        tape,
        x,
        &graph.real_from,
        &graph.real_to,
        layer,
        EdgeWeight::Features(&graph.real_beta),
    )
}

/// Edge readout: concatenates each road edge's endpoint embeddings with
/// its normalized features, maps them to a ratio, and scales by capacity
/// for the flow.
pub fn predict_edge_ratios<T: Scalar>(
    tape: &mut Tape<T>,
    embeddings: Var,
    graph: &HeteroGraph<T>,
    head: &AffineVars,
) -> Result<TapePrediction, HetGatError> {
    let source = tape.gather_rows(embeddings, &graph.real_from)?;
    let dest = tape.gather_rows(embeddings, &graph.real_to)?;
    let beta = tape.leaf(graph.real_beta.clone());
    let joined = tape.concat_cols(&[source, dest, beta])?;
    let alpha = affine(tape, joined, head)?;
    let capacity = tape.leaf(graph.real_capacity.clone());
    let flow = tape.mul(alpha, capacity)?;
    Ok(TapePrediction { alpha, flow })
}

/// Full forward pass of the graph model. In homogeneous mode the
/// demand-edge layers are skipped entirely.
pub fn model_forward<T: Scalar>(
    tape: &mut Tape<T>,
    graph: &HeteroGraph<T>,
    vars: &HetGatVars,
    config: &ModelConfig,
) -> Result<TapePrediction, HetGatError> {
    let mut x = preprocess_embed(tape, graph, &vars.preprocess)?;
    if !config.homogeneous_mode {
        for layer in &vars.v_layers {
            x = v_encoder_layer(tape, x, graph, layer)?;
        }
    }
    for layer in &vars.r_layers {
        x = r_encoder_layer(tape, x, graph, layer)?;
    }
    predict_edge_ratios(tape, x, graph, &vars.head)
}

/// Forward pass of the dense baseline: flattened node features through
/// the hidden stack to a context row, then a per-edge readout of
/// [context ++ edge features].
pub fn fcnn_forward<T: Scalar>(
    tape: &mut Tape<T>,
    graph: &HeteroGraph<T>,
    vars: &FcnnVars,
) -> Result<TapePrediction, HetGatError> {
    let first = vars.layers.first().ok_or_else(|| {
        HetGatError::Shape("dense baseline has no layers".to_string())
    })?;
    let (rows, cols) = graph.features.shape();
    let expected = tape.value(first.weight).rows();
    if rows * cols != expected {
        return Err(HetGatError::Shape(format!(
            "flattened feature width {} does not match the baseline input width {expected}",
            rows * cols
        )));
    }
    let features = tape.leaf(graph.features.clone());
    let mut x = tape.reshape(features, 1, rows * cols)?;
    for layer in &vars.layers {
        x = ffn(tape, x, layer)?;
    }
    let per_edge = tape.gather_rows(x, &vec![0; graph.real_edge_count()])?;
    let beta = tape.leaf(graph.real_beta.clone());
    let joined = tape.concat_cols(&[per_edge, beta])?;
    let alpha = affine(tape, joined, &vars.head)?;
    let capacity = tape.leaf(graph.real_capacity.clone());
    let flow = tape.mul(alpha, capacity)?;
    Ok(TapePrediction { alpha, flow })
}

/// Forward pass for either model.
pub fn forward<T: Scalar>(
    tape: &mut Tape<T>,
    graph: &HeteroGraph<T>,
    vars: &ModelVars,
    config: &ModelConfig,
) -> Result<TapePrediction, HetGatError> {
    match vars {
        ModelVars::HetGat(v) => model_forward(tape, graph, v, config),
        ModelVars::Fcnn(v) => fcnn_forward(tape, graph, v),
    }
}

/// Convenience inference: stages the parameters on a fresh tape, runs the
/// forward pass, and extracts plain vectors.
pub fn predict<T: Scalar>(
    graph: &HeteroGraph<T>,
    params: &crate::params::ModelParams<T>,
    config: &ModelConfig,
) -> Result<Prediction<T>, HetGatError> {
    let mut tape = Tape::new();
    let (vars, _) = crate::params::stage(&mut tape, params)?;
    let pred = forward(&mut tape, graph, &vars, config)?;
    Ok(Prediction {
        alpha: tape.value(pred.alpha).data().to_vec(),
        flow: tape.value(pred.flow).data().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_hetero_graph, FeatureScale};
    use crate::params::{stage, HetGatParams, ModelParams};
    use netcore::{Link, Network, Node, OdMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_config() -> ModelConfig {
        ModelConfig {
            embed_size: 8,
            heads: 2,
            v_layers: 2,
            r_layers: 2,
            hidden_size: 6,
            homogeneous_mode: false,
            reversed_virtual: false,
            weights: Default::default(),
        }
    }

    fn ring_net() -> Network<f64> {
        let nodes = (0..4)
            .map(|id| Node {
                id,
                x: (id % 2) as f64,
                y: (id / 2) as f64,
            })
            .collect();
        let links = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]
            .into_iter()
            .map(|(from, to)| Link {
                from,
                to,
                free_flow_time: 1.0 + from as f64,
                capacity: 10.0 + to as f64,
                bpr_b: 0.15,
                bpr_power: 4.0,
            })
            .collect();
        Network::new(nodes, links).unwrap()
    }

    fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<f64> {
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::from_vec(rows, cols, data).unwrap()
    }

    fn staged_hetgat(
        tape: &mut Tape<f64>,
        config: &ModelConfig,
        n_nodes: usize,
        seed: u64,
    ) -> crate::params::HetGatVars {
        let params = ModelParams::HetGat(HetGatParams::init(config, n_nodes, seed).unwrap());
        match stage(tape, &params).unwrap().0 {
            ModelVars::HetGat(v) => v,
            ModelVars::Fcnn(_) => unreachable!(),
        }
    }

    #[test]
    fn attention_weights_sum_to_one_per_source() {
        let config = test_config();
        let mut tape = Tape::new();
        let vars = staged_hetgat(&mut tape, &config, 4, 9);
        let head = &vars.v_layers[0].heads[0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = tape.leaf(random_rows(&mut rng, 4, config.head_dim()));
        let from = vec![0, 0, 0, 1, 1, 2];
        let to = vec![1, 2, 3, 0, 2, 0];
        let guard = tape.leaf(Tensor::from_vec(4, 1, vec![0.0, 0.0, 0.0, 1.0]).unwrap());
        let (score, _) =
            head_messages(&mut tape, x, &from, &to, head, &EdgeWeight::Learned, guard).unwrap();
        let scores = tape.value(score);
        for source in 0..3 {
            let total: f64 = from
                .iter()
                .enumerate()
                .filter(|(_, &u)| u == source)
                .map(|(e, _)| scores.get(e, 0))
                .sum();
            let weight_sum: f64 = from
                .iter()
                .enumerate()
                .filter(|(_, &u)| u == source)
                .map(|(e, _)| scores.get(e, 0) / total)
                .sum();
            assert!(
                (weight_sum - 1.0).abs() <= 1e-12,
                "source {source}: weights sum to {weight_sum}"
            );
        }
    }

    #[test]
    fn huge_logits_stay_finite() {
        let config = test_config();
        let mut tape = Tape::new();
        let vars = staged_hetgat(&mut tape, &config, 4, 9);
        let head = &vars.v_layers[0].heads[0];
        let d = config.head_dim();
        let huge = Tensor::from_vec(
            2,
            d,
            (0..2 * d).map(|i| 400.0 + i as f64 * 40.0).collect(),
        )
        .unwrap();
        let x = tape.leaf(huge);
        let guard = tape.leaf(Tensor::from_vec(2, 1, vec![0.0, 1.0]).unwrap());
        let (score, message) = head_messages(
            &mut tape,
            x,
            &[0, 0],
            &[0, 1],
            head,
            &EdgeWeight::Learned,
            guard,
        )
        .unwrap();
        assert!(tape.value(score).data().iter().all(|s| s.is_finite()));
        assert!(tape.value(message).data().iter().all(|m| m.is_finite()));
    }

    #[test]
    fn single_outgoing_edge_gets_weight_exactly_one() {
        let config = test_config();
        let mut tape = Tape::new();
        let vars = staged_hetgat(&mut tape, &config, 3, 21);
        let head = &vars.v_layers[0].heads[0];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = tape.leaf(random_rows(&mut rng, 3, config.head_dim()));
        let guard = tape.leaf(Tensor::from_vec(3, 1, vec![0.0, 1.0, 1.0]).unwrap());
        let (score, _) = head_messages(
            &mut tape,
            x,
            &[0],
            &[2],
            head,
            &EdgeWeight::Learned,
            guard,
        )
        .unwrap();
        let s = tape.value(score).get(0, 0);
        assert_eq!(s / s, 1.0);
    }

    #[test]
    fn empty_edge_set_is_an_exact_identity() {
        let config = test_config();
        let mut tape = Tape::new();
        let vars = staged_hetgat(&mut tape, &config, 4, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = tape.leaf(random_rows(&mut rng, 4, config.embed_size));
        let y = encoder_layer(&mut tape, x, &[], &[], &vars.v_layers[0], EdgeWeight::Learned)
            .unwrap();
        assert_eq!(tape.value(y).data(), tape.value(x).data());
    }

    #[test]
    fn nodes_without_outgoing_edges_pass_through_exactly() {
        let config = test_config();
        let mut tape = Tape::new();
        let vars = staged_hetgat(&mut tape, &config, 4, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = tape.leaf(random_rows(&mut rng, 4, config.embed_size));
        let y = encoder_layer(
            &mut tape,
            x,
            &[0],
            &[3],
            &vars.v_layers[1],
            EdgeWeight::Learned,
        )
        .unwrap();
        let before = tape.value(x).clone();
        let after = tape.value(y);
        for node in 1..4 {
            for col in 0..config.embed_size {
                assert_eq!(after.get(node, col), before.get(node, col));
            }
        }
        let moved = (0..config.embed_size)
            .any(|col| after.get(0, col) != before.get(0, col));
        assert!(moved, "the node with an outgoing edge should update");
    }

    #[test]
    fn zeroed_projections_make_encoder_layers_identity() {
        let config = test_config();
        let mut params = ModelParams::HetGat(HetGatParams::<f64>::init(&config, 4, 17).unwrap());
        let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
        for (name, tensor) in names.iter().zip(params.tensors_mut()) {
            if !name.ends_with("ln_gain") {
                *tensor = Tensor::zeros(tensor.rows(), tensor.cols());
            }
        }
        let mut tape = Tape::new();
        let vars = match stage(&mut tape, &params).unwrap().0 {
            ModelVars::HetGat(v) => v,
            ModelVars::Fcnn(_) => unreachable!(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x = tape.leaf(random_rows(&mut rng, 4, config.embed_size));
        let learned = encoder_layer(
            &mut tape,
            x,
            &[0, 1, 2],
            &[1, 2, 3],
            &vars.v_layers[0],
            EdgeWeight::Learned,
        )
        .unwrap();
        assert_eq!(tape.value(learned).data(), tape.value(x).data());
        let beta = Tensor::from_vec(3, 2, vec![0.2, 0.9, 0.5, 0.5, 1.0, 0.0]).unwrap();
        let physical = encoder_layer(
            &mut tape,
            x,
            &[0, 1, 2],
            &[1, 2, 3],
            &vars.r_layers[0],
            EdgeWeight::Features(&beta),
        )
        .unwrap();
        assert_eq!(tape.value(physical).data(), tape.value(x).data());
    }

    #[test]
    fn adaptive_edge_weight_orders_attention_scores() {
        let mut tape: Tape<f64> = Tape::new();
        let x = tape.leaf(
            Tensor::from_vec(3, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, -1.0]).unwrap(),
        );
        let pick_first = Tensor::from_vec(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let head = crate::params::HeadVars {
            w_q: tape.leaf(pick_first.clone()),
            w_k: tape.leaf(pick_first.clone()),
            w_v: tape.leaf(pick_first),
            beta: Some(AffineVars {
                weight: tape.leaf(Tensor::from_vec(4, 1, vec![0.0, 0.0, 0.0, 1.0]).unwrap()),
                bias: tape.leaf(Tensor::zeros(1, 1)),
            }),
            z: AffineVars {
                weight: tape.leaf(Tensor::zeros(2, 2)),
                bias: tape.leaf(Tensor::zeros(1, 2)),
            },
            ln_gain: tape.leaf(Tensor::filled(1, 2, 1.0)),
            ln_offset: tape.leaf(Tensor::zeros(1, 2)),
        };
        let guard = tape.leaf(Tensor::from_vec(3, 1, vec![0.0, 1.0, 1.0]).unwrap());
        let (score, _) = head_messages(
            &mut tape,
            x,
            &[0, 0],
            &[1, 2],
            &head,
            &EdgeWeight::Learned,
            guard,
        )
        .unwrap();
        let s1 = tape.value(score).get(0, 0);
        let s2 = tape.value(score).get(1, 0);
        assert!(s1 > s2, "larger edge weight should win: {s1} vs {s2}");
        let dot = 1.0 / 2.0_f64.sqrt();
        let expected_ratio = (dot * -0.01 - dot * 1.0).exp();
        assert!((s2 / s1 - expected_ratio).abs() < 1e-12);
    }

    #[test]
    fn no_demand_entries_match_homogeneous_mode_exactly() {
        let net = ring_net();
        let scale = FeatureScale::fit([&net]).unwrap();
        let empty = OdMatrix::new();
        let config = test_config();
        let graph = build_hetero_graph(&net, &empty, &scale, false).unwrap();
        let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 23).unwrap());
        let full = predict(&graph, &params, &config).unwrap();
        let mut homogeneous = config;
        homogeneous.homogeneous_mode = true;
        let skipped = predict(&graph, &params, &homogeneous).unwrap();
        assert_eq!(full.alpha, skipped.alpha);
        assert_eq!(full.flow, skipped.flow);
    }

    #[test]
    fn demand_edges_change_the_prediction() {
        let net = ring_net();
        let scale = FeatureScale::fit([&net]).unwrap();
        let od = OdMatrix::from_entries([(0, 2, 30.0), (1, 3, 20.0)]).unwrap();
        let config = test_config();
        let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
        let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 23).unwrap());
        let full = predict(&graph, &params, &config).unwrap();
        let mut homogeneous = config;
        homogeneous.homogeneous_mode = true;
        let skipped = predict(&graph, &params, &homogeneous).unwrap();
        assert_ne!(full.alpha, skipped.alpha);
    }

    #[test]
    fn predicted_flow_is_ratio_times_capacity() {
        let net = ring_net();
        let scale = FeatureScale::fit([&net]).unwrap();
        let od = OdMatrix::from_entries([(0, 2, 30.0)]).unwrap();
        let config = test_config();
        let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
        let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 29).unwrap());
        let pred = predict(&graph, &params, &config).unwrap();
        assert_eq!(pred.alpha.len(), net.link_count());
        assert_eq!(pred.flow.len(), net.link_count());
        for (e, link) in net.links().iter().enumerate() {
            assert_eq!(pred.flow[e], pred.alpha[e] * link.capacity);
        }
    }

    #[test]
    fn zeroed_baseline_predicts_zero_everywhere() {
        let net = ring_net();
        let scale = FeatureScale::fit([&net]).unwrap();
        let od = OdMatrix::from_entries([(0, 2, 30.0)]).unwrap();
        let config = test_config();
        let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
        let mut params =
            ModelParams::Fcnn(crate::params::FcnnParams::init(&config, 4, 31).unwrap());
        for tensor in params.tensors_mut() {
            *tensor = Tensor::zeros(tensor.rows(), tensor.cols());
        }
        let pred = predict(&graph, &params, &config).unwrap();
        assert!(pred.alpha.iter().all(|&a| a == 0.0));
        assert!(pred.flow.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn baseline_and_graph_model_share_the_output_shape() {
        let net = ring_net();
        let scale = FeatureScale::fit([&net]).unwrap();
        let od = OdMatrix::from_entries([(0, 2, 30.0)]).unwrap();
        let config = test_config();
        let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
        let fcnn = ModelParams::Fcnn(crate::params::FcnnParams::init(&config, 4, 37).unwrap());
        let pred = predict(&graph, &fcnn, &config).unwrap();
        assert_eq!(pred.alpha.len(), net.link_count());
        assert_eq!(pred.flow.len(), net.link_count());
    }

    #[test]
    fn wrong_network_size_is_rejected() {
        let net = ring_net();
        let scale = FeatureScale::fit([&net]).unwrap();
        let od = OdMatrix::from_entries([(0, 2, 30.0)]).unwrap();
        let config = test_config();
        let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
        let small = ModelParams::HetGat(HetGatParams::init(&config, 3, 41).unwrap());
        assert!(matches!(
            predict(&graph, &small, &config),
            Err(HetGatError::Shape(_))
        ));
        let small_fcnn = ModelParams::Fcnn(crate::params::FcnnParams::init(&config, 3, 41).unwrap());
        assert!(matches!(
            predict(&graph, &small_fcnn, &config),
            Err(HetGatError::Shape(_))
        ));
    }
}
