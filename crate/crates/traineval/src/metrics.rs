use hetgat::{demand_imbalance, predict, ModelConfig, ModelParams, SavedModel};
use rayon::prelude::*;
use scenario::Sample;

use crate::error::TrainError;
use crate::prepare::{homogenize_sample, prepare_samples, PreparedSample};

/// Error statistics of one model over one dataset split.
///
/// MAE and RMSE pool every link prediction of every sample into a single
/// population. The conservation term is normalized by each sample's total
/// demand first and the per-sample values are then averaged, so samples
/// with heavy demand do not drown out light ones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub mae_flow: f64,
    pub rmse_flow: f64,
    pub mae_ratio: f64,
    pub rmse_ratio: f64,
    pub normalized_conservation: f64,
}

/// Per-sample sums, kept separate so pooling stays associative.
struct SampleEval {
    abs_flow: f64,
    sq_flow: f64,
    abs_ratio: f64,
    sq_ratio: f64,
    links: usize,
    lc_norm: f64,
}

/// Sum of |inflow - outflow - demand imbalance| over the nodes, for
/// predicted flows held as plain values.
pub fn conservation_residual_sum(
    flows: &[f64],
    sample: &PreparedSample<f64>,
) -> Result<f64, TrainError> {
    let n = sample.network.node_count();
    if flows.len() != sample.network.link_count() {
        return Err(TrainError::Data(format!(
            "{} flows for {} links",
            flows.len(),
            sample.network.link_count()
        )));
    }
    let mut net_inflow = vec![0.0; n];
    for (e, link) in sample.network.links().iter().enumerate() {
        net_inflow[link.to] += flows[e];
        net_inflow[link.from] -= flows[e];
    }
    let imbalance = demand_imbalance(n, &sample.od_true);
    Ok((0..n)
        .map(|v| (net_inflow[v] - imbalance.get(v, 0)).abs())
        .sum())
}

fn eval_sample(
    params: &ModelParams<f64>,
    config: &ModelConfig,
    sample: &PreparedSample<f64>,
) -> Result<SampleEval, TrainError> {
    let links = sample.network.link_count();
    if sample.flows.len() != links || sample.ratios.len() != links {
        return Err(TrainError::Data(format!(
            "sample labels cover {} flows and {} ratios for {links} links",
            sample.flows.len(),
            sample.ratios.len()
        )));
    }
    if sample.demand_total <= 0.0 {
        return Err(TrainError::Data(
            "sample has no demand to normalize the conservation term by".into(),
        ));
    }
    let pred = predict(&sample.graph, params, config)?;
    let mut eval = SampleEval {
        abs_flow: 0.0,
        sq_flow: 0.0,
        abs_ratio: 0.0,
        sq_ratio: 0.0,
        links,
        lc_norm: 0.0,
    };
    for e in 0..links {
        let df = pred.flow[e] - sample.flows[e];
        let dr = pred.alpha[e] - sample.ratios[e];
        eval.abs_flow += df.abs();
        eval.sq_flow += df * df;
        eval.abs_ratio += dr.abs();
        eval.sq_ratio += dr * dr;
    }
    eval.lc_norm = conservation_residual_sum(&pred.flow, sample)? / sample.demand_total;
    Ok(eval)
}

/// Evaluates a model over already-encoded samples, in parallel.
pub fn evaluate_prepared(
    params: &ModelParams<f64>,
    config: &ModelConfig,
    samples: &[PreparedSample<f64>],
) -> Result<Metrics, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::Data("cannot evaluate an empty split".into()));
    }
    let evals = samples
        .par_iter()
        .map(|sample| eval_sample(params, config, sample))
        .collect::<Result<Vec<_>, _>>()?;
    let n: usize = evals.iter().map(|e| e.links).sum();
    if n == 0 {
        return Err(TrainError::Data("no links to evaluate".into()));
    }
    let nf = n as f64;
    let count = evals.len() as f64;
    Ok(Metrics {
        mae_flow: evals.iter().map(|e| e.abs_flow).sum::<f64>() / nf,
        rmse_flow: (evals.iter().map(|e| e.sq_flow).sum::<f64>() / nf).sqrt(),
        mae_ratio: evals.iter().map(|e| e.abs_ratio).sum::<f64>() / nf,
        rmse_ratio: (evals.iter().map(|e| e.sq_ratio).sum::<f64>() / nf).sqrt(),
        normalized_conservation: evals.iter().map(|e| e.lc_norm).sum::<f64>() / count,
    })
}

/// Evaluates a saved model over raw samples, encoding them with the
/// model's own feature scale. Samples with fewer nodes than the model
/// expects are padded with isolated dummy nodes first, so one model can
/// be scored across mixed graph sizes.
pub fn evaluate_metrics(
    model: &SavedModel<f64>,
    samples: &[Sample<f64>],
) -> Result<Metrics, TrainError> {
    let width = model.params.n_nodes();
    let padded: Vec<Sample<f64>> = samples
        .iter()
        .map(|s| homogenize_sample(s, width))
        .collect::<Result<_, _>>()?;
    let prepared = prepare_samples(&padded, &model.scale, model.config.reversed_virtual)?;
    evaluate_prepared(&model.params, &model.config, &prepared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hetgat::FeatureScale;
    use netcore::{Link, Network, Node, OdMatrix};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use scenario::{DisruptionLevel, SampleMeta};

    fn line_network() -> Network<f64> {
        let nodes = (0..3)
            .map(|id| Node {
                id,
                x: id as f64,
                y: 0.0,
            })
            .collect();
        let links = vec![
            Link {
                from: 0,
                to: 1,
                free_flow_time: 1.0,
                capacity: 10.0,
                bpr_b: 0.15,
                bpr_power: 4.0,
            },
            Link {
                from: 1,
                to: 2,
                free_flow_time: 2.0,
                capacity: 8.0,
                bpr_b: 0.15,
                bpr_power: 4.0,
            },
        ];
        Network::new(nodes, links).unwrap()
    }

    fn sample_with_flows(flows: Vec<f64>, ratios: Vec<f64>, seed: u64) -> Sample<f64> {
        let network = line_network();
        let od = OdMatrix::from_entries([(0, 2, flows[0].max(1.0))]).unwrap();
        Sample {
            network,
            od_true: od.clone(),
            od_observed: od,
            mask: Vec::new(),
            flows,
            ratios,
            meta: SampleMeta {
                level: DisruptionLevel::Light,
                seed,
            },
        }
    }

    fn prepared(samples: &[Sample<f64>]) -> Vec<PreparedSample<f64>> {
        let scale = FeatureScale::fit(samples.iter().map(|s| &s.network)).unwrap();
        prepare_samples(samples, &scale, false).unwrap()
    }

    fn metrics_for_fixed(
        samples: &[PreparedSample<f64>],
        predict: impl Fn(&PreparedSample<f64>) -> (Vec<f64>, Vec<f64>),
    ) -> Metrics {
        let mut abs_flow = 0.0;
        let mut sq_flow = 0.0;
        let mut abs_ratio = 0.0;
        let mut sq_ratio = 0.0;
        let mut n = 0usize;
        let mut lc = 0.0;
        for sample in samples {
            let (alpha, flow) = predict(sample);
            for e in 0..flow.len() {
                let df = flow[e] - sample.flows[e];
                let dr = alpha[e] - sample.ratios[e];
                abs_flow += df.abs();
                sq_flow += df * df;
                abs_ratio += dr.abs();
                sq_ratio += dr * dr;
                n += 1;
            }
            lc += conservation_residual_sum(&flow, sample).unwrap() / sample.demand_total;
        }
        Metrics {
            mae_flow: abs_flow / n as f64,
            rmse_flow: (sq_flow / n as f64).sqrt(),
            mae_ratio: abs_ratio / n as f64,
            rmse_ratio: (sq_ratio / n as f64).sqrt(),
            normalized_conservation: lc / samples.len() as f64,
        }
    }

    #[test]
    fn empty_split_is_rejected() {
        let params = ModelParams::HetGat(
            hetgat::HetGatParams::init(&small_config(), 3, 0).unwrap(),
        );
        assert!(evaluate_prepared(&params, &small_config(), &[]).is_err());
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            embed_size: 4,
            heads: 2,
            v_layers: 1,
            r_layers: 1,
            hidden_size: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn ground_truth_flows_have_tiny_conservation_residual() {
        let network = line_network();
        let od = OdMatrix::from_entries([(0, 2, 6.0)]).unwrap();
        let sample = Sample {
            network,
            od_true: od.clone(),
            od_observed: od,
            mask: Vec::new(),
            flows: vec![6.0, 6.0],
            ratios: vec![0.6, 0.75],
            meta: SampleMeta {
                level: DisruptionLevel::Light,
                seed: 0,
            },
        };
        let prepared = prepared(&[sample]);
        let residual = conservation_residual_sum(&prepared[0].flows, &prepared[0]).unwrap();
        assert!(residual / prepared[0].demand_total < 1e-6);
    }

    #[test]
    fn constant_flow_offset_gives_unit_mae_and_rmse() {
        let samples = vec![
            sample_with_flows(vec![3.0, 3.0], vec![0.3, 0.375], 1),
            sample_with_flows(vec![5.0, 5.0], vec![0.5, 0.625], 2),
        ];
        let prepared = prepared(&samples);
        let metrics = metrics_for_fixed(&prepared, |s| {
            let flow: Vec<f64> = s.flows.iter().map(|f| f + 1.0).collect();
            (s.ratios.clone(), flow)
        });
        assert!((metrics.mae_flow - 1.0).abs() < 1e-12);
        assert!((metrics.rmse_flow - 1.0).abs() < 1e-12);
        assert_eq!(metrics.mae_ratio, 0.0);
        assert_eq!(metrics.rmse_ratio, 0.0);
    }

    #[test]
    fn perfect_predictions_score_zero_errors() {
        let samples = vec![sample_with_flows(vec![4.0, 4.0], vec![0.4, 0.5], 3)];
        let prepared = prepared(&samples);
        let metrics = metrics_for_fixed(&prepared, |s| (s.ratios.clone(), s.flows.clone()));
        assert_eq!(metrics.mae_flow, 0.0);
        assert_eq!(metrics.rmse_flow, 0.0);
        assert_eq!(metrics.mae_ratio, 0.0);
        assert_eq!(metrics.rmse_ratio, 0.0);
    }

    #[test]
    fn model_metrics_match_a_hand_rolled_aggregation() {
        let mut rng = StdRng::seed_from_u64(9);
        let samples: Vec<Sample<f64>> = (0..5)
            .map(|i| {
                let q: f64 = rng.gen_range(2.0..10.0);
                sample_with_flows(vec![q, q], vec![q / 10.0, q / 8.0], i)
            })
            .collect();
        let prepared = prepared(&samples);
        let config = small_config();
        let params =
            ModelParams::HetGat(hetgat::HetGatParams::init(&config, 3, 7).unwrap());
        let metrics = evaluate_prepared(&params, &config, &prepared).unwrap();
        let by_hand = metrics_for_fixed(&prepared, |s| {
            let pred = predict(&s.graph, &params, &config).unwrap();
            (pred.alpha, pred.flow)
        });
        assert!((metrics.mae_flow - by_hand.mae_flow).abs() < 1e-12);
        assert!((metrics.rmse_flow - by_hand.rmse_flow).abs() < 1e-12);
        assert!((metrics.mae_ratio - by_hand.mae_ratio).abs() < 1e-12);
        assert!((metrics.rmse_ratio - by_hand.rmse_ratio).abs() < 1e-12);
        assert!(
            (metrics.normalized_conservation - by_hand.normalized_conservation).abs() < 1e-12
        );
        assert!(metrics.rmse_flow >= metrics.mae_flow);
        assert!(metrics.rmse_ratio >= metrics.mae_ratio);
    }

    #[test]
    fn saved_model_evaluation_pads_smaller_samples_to_its_width() {
        let samples = vec![sample_with_flows(vec![4.0, 4.0], vec![0.4, 0.5], 3)];
        let config = small_config();
        let scale = FeatureScale::fit(samples.iter().map(|s| &s.network)).unwrap();
        let model = SavedModel {
            params: ModelParams::HetGat(hetgat::HetGatParams::init(&config, 5, 7).unwrap()),
            config,
            scale,
        };
        let metrics = evaluate_metrics(&model, &samples).unwrap();
        assert!(metrics.mae_ratio.is_finite());

        let narrow = SavedModel {
            params: ModelParams::HetGat(hetgat::HetGatParams::init(&config, 2, 7).unwrap()),
            config,
            scale,
        };
        assert!(evaluate_metrics(&narrow, &samples).is_err());
    }
}
