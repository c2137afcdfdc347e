use hetgat::{
    build_hetero_graph, forward, total_loss, FeatureScale, FcnnParams, HetGatParams,
    LossWeights, ModelConfig, ModelParams, ModelVars,
};
use netcore::{Link, Network, Node, OdMatrix};
use tensorad::{gradient_check_with, CheckOptions, TensorError};
use uesolver::{solve_ue_frank_wolfe, SolverOptions};

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
        from, to, free_flow_time, capacity, bpr_b: 0.15, bpr_power: 4.0,
    })
    .collect();
    Network::new(nodes, links).unwrap()
}

fn check(params: &ModelParams<f64>, config: &ModelConfig, step: f64, min_abs: f64) -> f64 {
    let net = toy_network();
    let od = OdMatrix::from_entries([(0, 3, 1.0), (2, 1, 0.4)]).unwrap();
    let sol = solve_ue_frank_wolfe(&net, &od, &SolverOptions::default()).unwrap();
    let scale = FeatureScale::fit([&net]).unwrap();
    let graph = build_hetero_graph(&net, &od, &scale, false).unwrap();
    let weights = LossWeights::default();
    let leaves: Vec<_> = params.tensors().into_iter().map(|(_, t)| t.clone()).collect();
    let opts = CheckOptions { step, min_abs_grad: min_abs, ..CheckOptions::default() };
    gradient_check_with(
        |tape, vars| {
            let to_te = |err: hetgat::HetGatError| match err {
                hetgat::HetGatError::Tensor(inner) => inner,
                other => TensorError::ShapeMismatch { op: "model", detail: other.to_string() },
            };
            let model = ModelVars::from_flat(params, vars).map_err(to_te)?;
            let pred = forward(tape, &graph, &model, config).map_err(to_te)?;
            let loss = total_loss(tape, &pred, &sol.ratios, &sol.flows, &net, &od, &weights)
                .map_err(to_te)?;
            Ok(loss.l_total)
        },
        &leaves,
        &opts,
    )
    .unwrap()
}

fn main() {
    let config = ModelConfig {
        embed_size: 4, heads: 2, v_layers: 1, r_layers: 1, hidden_size: 4,
        ..ModelConfig::default()
    };
    for (step, min_abs) in [(1e-6, 1e-4), (3e-7, 1e-4), (1e-7, 1e-4)] {
        let mut fails_a = 0;
        let mut fails_d = 0;
        let mut worst_a = 0.0f64;
        let mut worst_d = 0.0f64;
        let mut second_a = 0.0f64;
        for seed in 0..48u64 {
            let a = check(&ModelParams::HetGat(HetGatParams::init(&config, 4, seed).unwrap()), &config, step, min_abs);
            let d = check(&ModelParams::Fcnn(FcnnParams::init(&config, 4, seed).unwrap()), &config, step, min_abs);
            if a >= 1e-4 { fails_a += 1; }
            if d >= 1e-4 { fails_d += 1; }
            if a > worst_a { second_a = worst_a; worst_a = a; } else if a > second_a { second_a = a; }
            worst_d = worst_d.max(d);
        }
        println!("step {step:.0e}: attention fails {fails_a}/48 (worst {worst_a:.2e}, runner-up {second_a:.2e}); dense fails {fails_d}/48 (worst {worst_d:.2e})");
    }
}
