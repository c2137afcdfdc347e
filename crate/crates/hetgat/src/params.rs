use netcore::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tensorad::{Tape, Tensor, Var};

use crate::config::ModelConfig;
use crate::error::HetGatError;

/// One dense layer: `x · weight + bias` with `weight` fan-in by fan-out
/// and `bias` a single broadcast row.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine<T: Scalar = f64> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Affine<T> {
    fn init<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: xavier(rng, fan_in, fan_out),
            bias: Tensor::zeros(1, fan_out),
        }
    }
}

/// Parameters of one attention head inside an encoder layer.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams<T: Scalar = f64> {
    pub w_q: Tensor<T>,
    pub w_k: Tensor<T>,
    pub w_v: Tensor<T>,
    /// Adaptive edge-weight layer, present only in demand-edge encoders.
    pub beta: Option<Affine<T>>,
    /// Feed-forward applied to the aggregated message.
    pub z: Affine<T>,
    pub ln_gain: Tensor<T>,
    pub ln_offset: Tensor<T>,
}

/// All heads of one encoder layer.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayerParams<T: Scalar = f64> {
    pub heads: Vec<HeadParams<T>>,
}

/// Learnable state of the graph attention model.
#[derive(Clone, Debug, PartialEq)]
pub struct HetGatParams<T: Scalar = f64> {
    /// Three dense layers mapping raw node features to the embedding.
    pub preprocess: Vec<Affine<T>>,
    pub v_layers: Vec<EncoderLayerParams<T>>,
    pub r_layers: Vec<EncoderLayerParams<T>>,
    /// Edge readout on [source ++ destination ++ edge features].
    pub head: Affine<T>,
}

/// Learnable state of the dense baseline: five hidden layers over the
/// flattened node features plus a per-edge readout.
#[derive(Clone, Debug, PartialEq)]
pub struct FcnnParams<T: Scalar = f64> {
    pub layers: Vec<Affine<T>>,
    pub head: Affine<T>,
}

pub const FCNN_DEPTH: usize = 5;

/// Either model's parameters behind one interface, so training,
/// checkpointing, and the optimizer are model-agnostic.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelParams<T: Scalar = f64> {
    HetGat(HetGatParams<T>),
    Fcnn(FcnnParams<T>),
}

fn xavier<T: Scalar, R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor<T> {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| T::from(rng.gen_range(-a..a)).unwrap())
        .collect();
    Tensor::from_vec(fan_in, fan_out, data).unwrap()
}

fn init_head<T: Scalar, R: Rng>(rng: &mut R, d: usize, with_beta: bool) -> HeadParams<T> {
    HeadParams {
        w_q: xavier(rng, d, d),
        w_k: xavier(rng, d, d),
        w_v: xavier(rng, d, d),
        beta: with_beta.then(|| Affine::init(rng, 2 * d, 1)),
        z: Affine::init(rng, d, d),
        ln_gain: Tensor::filled(1, d, T::one()),
        ln_offset: Tensor::zeros(1, d),
    }
}

fn init_encoder<T: Scalar, R: Rng>(
    rng: &mut R,
    config: &ModelConfig,
    layers: usize,
    with_beta: bool,
) -> Vec<EncoderLayerParams<T>> {
    (0..layers)
        .map(|_| EncoderLayerParams {
            heads: (0..config.heads)
                .map(|_| init_head(rng, config.head_dim(), with_beta))
                .collect(),
        })
        .collect()
}

impl<T: Scalar> HetGatParams<T> {
    /// Fresh parameters for graphs with `n_nodes` nodes: weights drawn
    /// uniformly with Xavier bounds, biases and layer-norm offsets zero,
    /// gains one.
    pub fn init(config: &ModelConfig, n_nodes: usize, seed: u64) -> Result<Self, HetGatError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (input, hidden, embed) = (n_nodes + 2, config.hidden_size, config.embed_size);
        Ok(Self {
            preprocess: vec![
                Affine::init(&mut rng, input, hidden),
                Affine::init(&mut rng, hidden, hidden),
                Affine::init(&mut rng, hidden, embed),
            ],
            v_layers: init_encoder(&mut rng, config, config.v_layers, true),
            r_layers: init_encoder(&mut rng, config, config.r_layers, false),
            head: Affine::init(&mut rng, 2 * embed + 2, 1),
        })
    }

    /// Node count the preprocessing layer was sized for.
    pub fn n_nodes(&self) -> usize {
        self.preprocess[0].weight.rows() - 2
    }
}

impl<T: Scalar> FcnnParams<T> {
    pub fn init(config: &ModelConfig, n_nodes: usize, seed: u64) -> Result<Self, HetGatError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = config.hidden_size;
        let mut widths = vec![n_nodes * (n_nodes + 2)];
        widths.extend(std::iter::repeat(hidden).take(FCNN_DEPTH));
        let layers = widths
            .windows(2)
            .map(|w| Affine::init(&mut rng, w[0], w[1]))
            .collect();
        Ok(Self {
            layers,
            head: Affine::init(&mut rng, hidden + 2, 1),
        })
    }

    /// Node count the input layer was sized for, recovered from its
    /// width `n * (n + 2)`.
    pub fn n_nodes(&self) -> usize {
        let width = self.layers[0].weight.rows();
        ((width + 1) as f64).sqrt() as usize - 1
    }
}

fn affine_entries<'a, T: Scalar>(
    prefix: String,
    layer: &'a Affine<T>,
    out: &mut Vec<(String, &'a Tensor<T>)>,
) {
    out.push((format!("{prefix}.w"), &layer.weight));
    out.push((format!("{prefix}.b"), &layer.bias));
}

fn encoder_entries<'a, T: Scalar>(
    prefix: &str,
    layers: &'a [EncoderLayerParams<T>],
    out: &mut Vec<(String, &'a Tensor<T>)>,
) {
    for (l, layer) in layers.iter().enumerate() {
        for (h, head) in layer.heads.iter().enumerate() {
            let p = format!("{prefix}{l}.h{h}");
            out.push((format!("{p}.wq"), &head.w_q));
            out.push((format!("{p}.wk"), &head.w_k));
            out.push((format!("{p}.wv"), &head.w_v));
            if let Some(beta) = &head.beta {
                affine_entries(format!("{p}.beta"), beta, out);
            }
            affine_entries(format!("{p}.z"), &head.z, out);
            out.push((format!("{p}.ln_gain"), &head.ln_gain));
            out.push((format!("{p}.ln_offset"), &head.ln_offset));
        }
    }
}

fn affine_slots<'a, T: Scalar>(layer: &'a mut Affine<T>, out: &mut Vec<&'a mut Tensor<T>>) {
    out.push(&mut layer.weight);
    out.push(&mut layer.bias);
}

fn encoder_slots<'a, T: Scalar>(
    layers: &'a mut [EncoderLayerParams<T>],
    out: &mut Vec<&'a mut Tensor<T>>,
) {
    for layer in layers {
        for head in &mut layer.heads {
            out.push(&mut head.w_q);
            out.push(&mut head.w_k);
            out.push(&mut head.w_v);
            if let Some(beta) = &mut head.beta {
                affine_slots(beta, out);
            }
            affine_slots(&mut head.z, out);
            out.push(&mut head.ln_gain);
            out.push(&mut head.ln_offset);
        }
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Every tensor with a stable name, in a fixed flat order. Gradients,
    /// optimizer state, and checkpoints all follow this order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        match self {
            Self::HetGat(p) => {
                for (i, layer) in p.preprocess.iter().enumerate() {
                    affine_entries(format!("pre{i}"), layer, &mut out);
                }
                encoder_entries("v", &p.v_layers, &mut out);
                encoder_entries("r", &p.r_layers, &mut out);
                affine_entries("head".to_string(), &p.head, &mut out);
            }
            Self::Fcnn(p) => {
                for (i, layer) in p.layers.iter().enumerate() {
                    affine_entries(format!("dense{i}"), layer, &mut out);
                }
                affine_entries("head".to_string(), &p.head, &mut out);
            }
        }
        out
    }

    /// Mutable view of every tensor, in [`Self::tensors`] order.
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out: Vec<&mut Tensor<T>> = Vec::new();
        match self {
            Self::HetGat(p) => {
                for layer in &mut p.preprocess {
                    affine_slots(layer, &mut out);
                }
                encoder_slots(&mut p.v_layers, &mut out);
                encoder_slots(&mut p.r_layers, &mut out);
                affine_slots(&mut p.head, &mut out);
            }
            Self::Fcnn(p) => {
                for layer in &mut p.layers {
                    affine_slots(layer, &mut out);
                }
                affine_slots(&mut p.head, &mut out);
            }
        }
        out
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::HetGat(_) => "hetgat",
            Self::Fcnn(_) => "fcnn",
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            Self::HetGat(p) => p.n_nodes(),
            Self::Fcnn(p) => p.n_nodes(),
        }
    }
}

/// Tape handles of one dense layer.
#[derive(Clone, Copy, Debug)]
pub struct AffineVars {
    pub weight: Var,
    pub bias: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct HeadVars {
    pub w_q: Var,
    pub w_k: Var,
    pub w_v: Var,
    pub beta: Option<AffineVars>,
    pub z: AffineVars,
    pub ln_gain: Var,
    pub ln_offset: Var,
}

#[derive(Clone, Debug)]
pub struct LayerVars {
    pub heads: Vec<HeadVars>,
}

/// Tape handles mirroring [`HetGatParams`].
#[derive(Clone, Debug)]
pub struct HetGatVars {
    pub preprocess: Vec<AffineVars>,
    pub v_layers: Vec<LayerVars>,
    pub r_layers: Vec<LayerVars>,
    pub head: AffineVars,
}

/// Tape handles mirroring [`FcnnParams`].
#[derive(Clone, Debug)]
pub struct FcnnVars {
    pub layers: Vec<AffineVars>,
    pub head: AffineVars,
}

/// Tape handles for either model.
#[derive(Clone, Debug)]
pub enum ModelVars {
    HetGat(HetGatVars),
    Fcnn(FcnnVars),
}

struct Cursor<'a> {
    vars: &'a [Var],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<Var, HetGatError> {
        let var = self.vars.get(self.at).copied().ok_or_else(|| {
            HetGatError::Shape(format!(
                "parameter list ends at {} entries, structure expects more",
                self.vars.len()
            ))
        })?;
        self.at += 1;
        Ok(var)
    }

    fn affine(&mut self) -> Result<AffineVars, HetGatError> {
        Ok(AffineVars {
            weight: self.next()?,
            bias: self.next()?,
        })
    }

    fn encoder(
        &mut self,
        layers: &[EncoderLayerParams<impl Scalar>],
    ) -> Result<Vec<LayerVars>, HetGatError> {
        layers
            .iter()
            .map(|layer| {
                let heads = layer
                    .heads
                    .iter()
                    .map(|head| {
                        Ok(HeadVars {
                            w_q: self.next()?,
                            w_k: self.next()?,
                            w_v: self.next()?,
                            beta: head.beta.as_ref().map(|_| self.affine()).transpose()?,
                            z: self.affine()?,
                            ln_gain: self.next()?,
                            ln_offset: self.next()?,
                        })
                    })
                    .collect::<Result<_, HetGatError>>()?;
                Ok(LayerVars { heads })
            })
            .collect()
    }
}

impl ModelVars {
    /// Reassembles structured handles from a flat list in
    /// [`ModelParams::tensors`] order; `shape` supplies the structure.
    pub fn from_flat<T: Scalar>(
        shape: &ModelParams<T>,
        vars: &[Var],
    ) -> Result<Self, HetGatError> {
        let mut cursor = Cursor { vars, at: 0 };
        let out = match shape {
            ModelParams::HetGat(p) => {
                let preprocess = p
                    .preprocess
                    .iter()
                    .map(|_| cursor.affine())
                    .collect::<Result<_, _>>()?;
                let v_layers = cursor.encoder(&p.v_layers)?;
                let r_layers = cursor.encoder(&p.r_layers)?;
                Self::HetGat(HetGatVars {
                    preprocess,
                    v_layers,
                    r_layers,
                    head: cursor.affine()?,
                })
            }
            ModelParams::Fcnn(p) => {
                let layers = p
                    .layers
                    .iter()
                    .map(|_| cursor.affine())
                    .collect::<Result<_, _>>()?;
                Self::Fcnn(FcnnVars {
                    layers,
                    head: cursor.affine()?,
                })
            }
        };
        if cursor.at != vars.len() {
            return Err(HetGatError::Shape(format!(
                "structure consumed {} of {} parameters",
                cursor.at,
                vars.len()
            )));
        }
        Ok(out)
    }
}

/// Puts every parameter on the tape as a leaf and returns both the
/// structured handles and the flat leaf list (in [`ModelParams::tensors`]
/// order) for gradient extraction.
pub fn stage<T: Scalar>(
    tape: &mut Tape<T>,
    params: &ModelParams<T>,
) -> Result<(ModelVars, Vec<Var>), HetGatError> {
    let flat: Vec<Var> = params
        .tensors()
        .into_iter()
        .map(|(_, tensor)| tape.leaf(tensor.clone()))
        .collect();
    let vars = ModelVars::from_flat(params, &flat)?;
    Ok((vars, flat))
}
