//! End-to-end model properties: gradient correctness of the full loss,
//! insensitivity to storage order, sensitivity to the observed demand,
//! and exact persistence.

use hetgat::{
    build_hetero_graph, forward, load_model, predict, save_model, total_loss, FeatureScale,
    HetGatError, HetGatParams, LossWeights, ModelConfig, ModelParams, ModelVars, SavedModel,
};
use netcore::{Link, Network, Node, OdMatrix};
use tensorad::{gradient_check_with, CheckOptions, TensorError};
use uesolver::{solve_ue_frank_wolfe, SolverOptions};

fn toy_net() -> Network<f64> {
    let nodes = vec![
        Node { id: 0, x: 0.0, y: 0.0 },
        Node { id: 1, x: 1.0, y: 0.0 },
        Node { id: 2, x: 0.0, y: 1.0 },
        Node { id: 3, x: 1.0, y: 1.0 },
    ];
    let links = [
        (0, 1, 1.0, 6.0),
        (0, 2, 1.5, 8.0),
        (1, 3, 1.0, 6.0),
        (2, 3, 1.2, 8.0),
        (1, 2, 0.8, 4.0),
        (3, 0, 2.0, 10.0),
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
    Network::new(nodes, links).unwrap()
}

fn toy_demand() -> OdMatrix<f64> {
    OdMatrix::from_entries([(0, 3, 12.0), (1, 2, 6.0), (2, 1, 3.0)]).unwrap()
}

fn toy_labels(net: &Network<f64>, od: &OdMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let solution = solve_ue_frank_wolfe(net, od, &SolverOptions::default()).unwrap();
    (solution.ratios, solution.flows)
}

fn small_config() -> ModelConfig {
    ModelConfig {
        embed_size: 4,
        heads: 2,
        v_layers: 1,
        r_layers: 1,
        hidden_size: 4,
        homogeneous_mode: false,
        reversed_virtual: false,
        weights: LossWeights::default(),
    }
}

fn as_tensor_error(err: HetGatError) -> TensorError {
    match err {
        HetGatError::Tensor(inner) => inner,
        other => TensorError::ShapeMismatch {
            op: "model",
            detail: other.to_string(),
        },
    }
}

fn check_loss_gradients(params: &ModelParams<f64>, config: &ModelConfig) -> f64 {
    let net = toy_net();
    let od = toy_demand();
    let (ratios, flows) = toy_labels(&net, &od);
    let scale = FeatureScale::fit([&net]).unwrap();
    let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
    let leaves: Vec<_> = params
        .tensors()
        .into_iter()
        .map(|(_, tensor)| tensor.clone())
        .collect();
    let opts = CheckOptions {
        step: 1e-4,
        ..CheckOptions::default()
    };
    gradient_check_with(
        |tape, vars| {
            let model = ModelVars::from_flat(params, vars).map_err(as_tensor_error)?;
            let pred = forward(tape, &graph, &model, config).map_err(as_tensor_error)?;
            let loss = total_loss(
                tape,
                &pred,
                &ratios,
                &flows,
                &net,
                &od,
                &config.weights,
            )
            .map_err(as_tensor_error)?;
            Ok(loss.l_total)
        },
        &leaves,
        &opts,
    )
    .unwrap()
}

#[test]
fn full_loss_gradients_match_finite_differences() {
    let config = small_config();
    let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 3).unwrap());
    let worst = check_loss_gradients(&params, &config);
    assert!(worst < 1e-4, "worst relative gradient error {worst}");
}


#[test]
fn baseline_loss_gradients_match_finite_differences() {
    let config = small_config();
    let params = ModelParams::Fcnn(hetgat::FcnnParams::init(&config, 4, 5).unwrap());
    let worst = check_loss_gradients(&params, &config);
    assert!(worst < 1e-4, "worst relative gradient error {worst}");
}

fn permute_network(net: &Network<f64>, perm: &[usize]) -> Network<f64> {
    let mut nodes: Vec<Node<f64>> = (0..net.node_count())
        .map(|_| Node {
            id: 0,
            x: 0.0,
            y: 0.0,
        })
        .collect();
    for node in net.nodes() {
        nodes[perm[node.id]] = Node {
            id: perm[node.id],
            x: node.x,
            y: node.y,
        };
    }
    let links = net
        .links()
        .iter()
        .map(|link| Link {
            from: perm[link.from],
            to: perm[link.to],
            ..link.clone()
        })
        .collect();
    Network::new(nodes, links).unwrap()
}

fn permute_od(od: &OdMatrix<f64>, perm: &[usize]) -> OdMatrix<f64> {
    OdMatrix::from_entries(od.iter().map(|(o, d, q)| (perm[o], perm[d], q))).unwrap()
}

#[test]
fn relabeling_nodes_relabels_predictions() {
    let net = toy_net();
    let od = toy_demand();
    let config = small_config();
    let scale = FeatureScale::fit([&net]).unwrap();
    let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
    let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 7).unwrap());
    let base = predict(&graph, &params, &config).unwrap();

    let perm = [2usize, 0, 3, 1];
    let relabeled_net = permute_network(&net, &perm);
    let relabeled_od = permute_od(&od, &perm);
    let relabeled_graph =
        build_hetero_graph(&relabeled_net, &relabeled_od, &scale, false).unwrap();

    let mut relabeled_params = params.clone();
    {
        let mut slots = relabeled_params.tensors_mut();
        let w = &mut slots[0];
        let original = w.clone();
        for (old_row, &new_row) in perm.iter().enumerate() {
            for col in 0..original.cols() {
                w.set(new_row, col, original.get(old_row, col));
            }
        }
    }
    let relabeled = predict(&relabeled_graph, &relabeled_params, &config).unwrap();

    for (e, (a, b)) in base.alpha.iter().zip(&relabeled.alpha).enumerate() {
        assert!(
            (a - b).abs() <= 1e-12 * a.abs().max(1.0),
            "link {e}: {a} vs {b}"
        );
    }
}

#[test]
fn link_storage_order_does_not_change_predictions() {
    let net = toy_net();
    let od = toy_demand();
    let config = small_config();
    let scale = FeatureScale::fit([&net]).unwrap();
    let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 7).unwrap());

    let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
    let base = predict(&graph, &params, &config).unwrap();

    let order = [5usize, 2, 0, 4, 1, 3];
    let shuffled_links: Vec<Link<f64>> = order.iter().map(|&e| net.links()[e].clone()).collect();
    let shuffled = Network::new(net.nodes().to_vec(), shuffled_links).unwrap();
    let shuffled_graph = build_hetero_graph(&shuffled, &od, &scale, false).unwrap();
    let moved = predict(&shuffled_graph, &params, &config).unwrap();

    for (slot, &e) in order.iter().enumerate() {
        assert!(
            (moved.alpha[slot] - base.alpha[e]).abs() <= 1e-12 * base.alpha[e].abs().max(1.0),
            "link {e}: {} vs {}",
            moved.alpha[slot],
            base.alpha[e]
        );
        assert!(
            (moved.flow[slot] - base.flow[e]).abs() <= 1e-12 * base.flow[e].abs().max(1.0)
        );
    }
}

#[test]
fn loss_is_invariant_to_consistent_link_permutation() {
    let net = toy_net();
    let od = toy_demand();
    let (ratios, flows) = toy_labels(&net, &od);
    let config = small_config();
    let scale = FeatureScale::fit([&net]).unwrap();
    let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 7).unwrap());

    let evaluate = |network: &Network<f64>, r: &[f64], f: &[f64]| -> f64 {
        let graph = build_hetero_graph(network, &od, &scale, false).unwrap();
        let mut tape = tensorad::Tape::new();
        let (vars, _) = hetgat::stage(&mut tape, &params).unwrap();
        let pred = forward(&mut tape, &graph, &vars, &config).unwrap();
        let loss = total_loss(&mut tape, &pred, r, f, network, &od, &config.weights).unwrap();
        tape.value(loss.l_total).get(0, 0)
    };

    let base = evaluate(&net, &ratios, &flows);
    let order = [3usize, 0, 5, 1, 4, 2];
    let shuffled_links: Vec<Link<f64>> = order.iter().map(|&e| net.links()[e].clone()).collect();
    let shuffled = Network::new(net.nodes().to_vec(), shuffled_links).unwrap();
    let shuffled_ratios: Vec<f64> = order.iter().map(|&e| ratios[e]).collect();
    let shuffled_flows: Vec<f64> = order.iter().map(|&e| flows[e]).collect();
    let moved = evaluate(&shuffled, &shuffled_ratios, &shuffled_flows);
    assert!(
        (base - moved).abs() <= 1e-12 * base.abs().max(1.0),
        "{base} vs {moved}"
    );
}

#[test]
fn masking_an_od_pair_changes_predictions() {
    let net = toy_net();
    let od = toy_demand();
    let config = small_config();
    let scale = FeatureScale::fit([&net]).unwrap();
    let params = ModelParams::HetGat(HetGatParams::init(&config, 4, 7).unwrap());

    let full_graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
    let full = predict(&full_graph, &params, &config).unwrap();

    let mut masked_od = od.clone();
    masked_od.set(0, 3, 0.0).unwrap();
    let masked_graph = build_hetero_graph(&net, &masked_od, &scale, false).unwrap();
    let masked = predict(&masked_graph, &params, &config).unwrap();

    let max_diff = full
        .alpha
        .iter()
        .zip(&masked.alpha)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    assert!(max_diff > 1e-12, "masking left every ratio unchanged");
}

#[test]
fn reloaded_models_predict_identically() {
    let net = toy_net();
    let od = toy_demand();
    let config = small_config();
    let scale = FeatureScale::fit([&net]).unwrap();
    let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
    let model = SavedModel {
        params: ModelParams::HetGat(HetGatParams::init(&config, 4, 13).unwrap()),
        config,
        scale,
    };
    let base = predict(&graph, &model.params, &model.config).unwrap();

    let dir = std::env::temp_dir().join("hetgat_invariants_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("roundtrip.ckpt");
    save_model(&path, &model).unwrap();
    let restored: SavedModel<f64> = load_model(&path).unwrap();
    std::fs::remove_file(&path).unwrap();

    let again = predict(&graph, &restored.params, &restored.config).unwrap();
    assert_eq!(base.alpha, again.alpha);
    assert_eq!(base.flow, again.flow);
}
