//! Feed-forward networks, their optimizer and the latent prior.
//!
//! One MLP representation backs the generator, the critic and the
//! importance-weight network; they differ only in their [`MlpSpec`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Bindings, Graph, NodeId};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Latent law: isotropic unit-variance Gaussian or uniform on [-1, 1]^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentPrior {
    pub kind: PriorKind,
    pub dim: usize,
}

impl LatentPrior {
    pub fn gaussian(dim: usize) -> Self {
        LatentPrior { kind: PriorKind::Gaussian, dim }
    }

    pub fn uniform(dim: usize) -> Self {
        LatentPrior { kind: PriorKind::Uniform, dim }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("latent prior dimension must be >= 1"));
        }
        Ok(())
    }
}

/// i.i.d. draws from the prior as an n x d tensor; deterministic per rng state.
pub fn prior_sample<R: Rng>(prior: &LatentPrior, n: usize, rng: &mut R) -> Result<Tensor> {
    prior.validate()?;
    if n == 0 {
        return Err(Error::config("prior_sample needs n >= 1"));
    }
    let mut values = Vec::with_capacity(n * prior.dim);
    match prior.kind {
        PriorKind::Gaussian => {
            for _ in 0..n * prior.dim {
                values.push(StandardNormal.sample(rng));
            }
        }
        PriorKind::Uniform => {
            for _ in 0..n * prior.dim {
                values.push(rng.random_range(-1.0..=1.0));
            }
        }
    }
    Tensor::new(n, prior.dim, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu { slope: f64 },
    Tanh,
}

impl Activation {
    fn apply_node(&self, g: &mut Graph, x: NodeId) -> Result<NodeId> {
        match self {
            Activation::Identity => Ok(x),
            Activation::Relu => g.relu(x),
            Activation::LeakyRelu { slope } => g.leaky_relu(x, *slope),
            Activation::Tanh => g.tanh(x),
        }
    }

    fn apply_tensor(&self, x: &Tensor) -> Tensor {
        match self {
            Activation::Identity => x.clone(),
            Activation::Relu => x.map(|v| v.max(0.0)),
            Activation::LeakyRelu { slope } => {
                let s = *slope;
                x.map(move |v| if v >= 0.0 { v } else { s * v })
            }
            Activation::Tanh => x.map(f64::tanh),
        }
    }
}

/// Architecture of a fully-connected net.
///
/// `layers` lists the widths including input and output, so it has at least
/// three entries (one hidden layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layers: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
}

impl MlpSpec {
    pub fn new(layers: Vec<usize>, hidden: Activation, output: Activation) -> Result<Self> {
        let spec = MlpSpec { layers, hidden, output };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 3 {
            return Err(Error::config(
                "MLP needs at least one hidden layer (three widths)",
            ));
        }
        if self.layers.iter().any(|&w| w == 0) {
            return Err(Error::config("MLP layer widths must be positive"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layers.last().expect("non-empty layer list")
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len() - 1
    }
}

/// Per-layer weights (in x out) and biases (1 x out).
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<(Tensor, Tensor)>,
}

impl MlpParams {
    pub fn matches(&self, spec: &MlpSpec) -> bool {
        self.layers.len() == spec.n_layers()
            && self
                .layers
                .iter()
                .zip(spec.layers.windows(2))
                .all(|((w, b), io)| w.shape() == (io[0], io[1]) && b.shape() == (1, io[1]))
    }

    pub fn n_scalars(&self) -> usize {
        self.layers.iter().map(|(w, b)| w.len() + b.len()).sum()
    }
}

/// A spec paired with matching parameters; the working handle for G, D, w.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: MlpParams,
}

impl Mlp {
    pub fn new(spec: MlpSpec, params: MlpParams) -> Result<Self> {
        spec.validate()?;
        if !params.matches(&spec) {
            return Err(Error::config("parameters do not match MLP spec"));
        }
        Ok(Mlp { spec, params })
    }

    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self> {
        let params = mlp_init(&spec, seed)?;
        Ok(Mlp { spec, params })
    }

    /// Plain numeric forward pass (same arithmetic as the graph path).
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols() != self.spec.input_dim() {
            return Err(Error::config(format!(
                "forward: input has {} columns, net expects {}",
                x.cols(),
                self.spec.input_dim()
            )));
        }
        let last = self.params.layers.len() - 1;
        let mut h = x.clone();
        for (i, (w, b)) in self.params.layers.iter().enumerate() {
            let pre = h.matmul(w)?.add_bias(b)?;
            let act = if i == last { &self.spec.output } else { &self.spec.hidden };
            h = act.apply_tensor(&pre);
        }
        Ok(h)
    }
}

/// He-style initialization: weights ~ N(0, 2 / fan_in), zero biases.
/// Deterministic per seed.
pub fn mlp_init(spec: &MlpSpec, seed: u64) -> Result<MlpParams> {
    spec.validate()?;
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(spec.n_layers());
    for io in spec.layers.windows(2) {
        let (fan_in, fan_out) = (io[0], io[1]);
        let scale = (2.0 / fan_in as f64).sqrt();
        let values = (0..fan_in * fan_out)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        let w = Tensor::new(fan_in, fan_out, values)?;
        let b = Tensor::zeros(1, fan_out);
        layers.push((w, b));
    }
    Ok(MlpParams { layers })
}

/// Symbolic MLP forward built into `graph`.
///
/// Parameters enter either as named inputs (trainable: bind them with
/// [`bind_params`]) or as embedded constants (frozen).
pub struct MlpNodes {
    pub output: NodeId,
    /// (weight, bias) node ids per layer; empty when frozen.
    pub params: Vec<(NodeId, NodeId)>,
}

pub enum ParamMode<'a> {
    /// Parameters as named inputs `{prefix}.w{i}` / `{prefix}.b{i}`.
    Trainable { prefix: &'a str },
    /// Parameters embedded as constants.
    Frozen(&'a MlpParams),
}

pub fn build_mlp(
    g: &mut Graph,
    spec: &MlpSpec,
    input: NodeId,
    mode: ParamMode<'_>,
) -> Result<MlpNodes> {
    spec.validate()?;
    let (_, in_cols) = g.shape(input);
    if in_cols != spec.input_dim() {
        return Err(Error::config(format!(
            "mlp graph: input node has {} columns, net expects {}",
            in_cols,
            spec.input_dim()
        )));
    }
    let last = spec.n_layers() - 1;
    let mut h = input;
    let mut params = Vec::new();
    for (i, io) in spec.layers.windows(2).enumerate() {
        let (w, b) = match &mode {
            ParamMode::Trainable { prefix } => {
                let w = g.input(format!("{prefix}.w{i}"), io[0], io[1])?;
                let b = g.input(format!("{prefix}.b{i}"), 1, io[1])?;
                params.push((w, b));
                (w, b)
            }
            ParamMode::Frozen(p) => {
                let (w, b) = &p.layers[i];
                (g.constant(w.clone()), g.constant(b.clone()))
            }
        };
        let mm = g.matmul(h, w)?;
        let pre = g.add_bias(mm, b)?;
        let act = if i == last { &spec.output } else { &spec.hidden };
        h = act.apply_node(g, pre)?;
    }
    Ok(MlpNodes { output: h, params })
}

/// Binds trainable MLP parameters under the naming used by [`build_mlp`].
pub fn bind_params(bindings: &mut Bindings, prefix: &str, params: &MlpParams) {
    for (i, (w, b)) in params.layers.iter().enumerate() {
        bindings.set(format!("{prefix}.w{i}"), w.clone());
        bindings.set(format!("{prefix}.b{i}"), b.clone());
    }
}

/// Generator forward: b x d latents to b x 2 points.
pub fn generator_forward(generator: &Mlp, z: &Tensor) -> Result<Tensor> {
    generator.forward(z)
}

/// Critic forward: b x 2 points to b x 1 scores.
pub fn critic_forward(critic: &Mlp, x: &Tensor) -> Result<Tensor> {
    critic.forward(x)
}

/// Importance-net forward: b x d latents to b x 1 non-negative weights.
pub fn importance_forward(importance: &Mlp, z: &Tensor) -> Result<Tensor> {
    let out = importance.forward(z)?;
    debug_assert!(out.values().iter().all(|&v| v >= 0.0));
    Ok(out)
}

/// Adam optimizer state for one MLP.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<(Tensor, Tensor)>,
    v: Vec<(Tensor, Tensor)>,
}

impl AdamState {
    pub fn new(params: &MlpParams, lr: f64, beta1: f64, beta2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::config("Adam betas must lie in [0, 1)"));
        }
        let zeros = |layers: &[(Tensor, Tensor)]| {
            layers
                .iter()
                .map(|(w, b)| {
                    (
                        Tensor::zeros(w.rows(), w.cols()),
                        Tensor::zeros(b.rows(), b.cols()),
                    )
                })
                .collect::<Vec<_>>()
        };
        Ok(AdamState {
            step: 0,
            lr,
            beta1,
            beta2,
            epsilon: 1e-8,
            m: zeros(&params.layers),
            v: zeros(&params.layers),
        })
    }
}

/// One bias-corrected Adam update; `grads` must be shaped like `params`.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &[(Tensor, Tensor)],
    state: &mut AdamState,
) -> Result<()> {
    if grads.len() != params.layers.len() {
        return Err(Error::config("adam_step: gradient layer count mismatch"));
    }
    state.step += 1;
    let bc1 = 1.0 - state.beta1.powi(state.step as i32);
    let bc2 = 1.0 - state.beta2.powi(state.step as i32);
    for (layer, ((g, m), v)) in params
        .layers
        .iter_mut()
        .zip(grads.iter().zip(&mut state.m).zip(&mut state.v))
    {
        for ((p, gt), (mt, vt)) in [
            (&mut layer.0, &g.0),
            (&mut layer.1, &g.1),
        ]
        .into_iter()
        .zip([(&mut m.0, &mut v.0), (&mut m.1, &mut v.1)])
        {
            if !p.same_shape(gt) {
                return Err(Error::config("adam_step: gradient shape mismatch"));
            }
            let (pv, gv) = (p.values_mut(), gt.values());
            let (mv, vv) = (mt.values_mut(), vt.values_mut());
            for i in 0..pv.len() {
                mv[i] = state.beta1 * mv[i] + (1.0 - state.beta1) * gv[i];
                vv[i] = state.beta2 * vv[i] + (1.0 - state.beta2) * gv[i] * gv[i];
                let m_hat = mv[i] / bc1;
                let v_hat = vv[i] / bc2;
                pv[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
            }
        }
    }
    Ok(())
}

/// Default generator architecture for 2-D targets: d -> 3 x 128 relu -> 2.
pub fn default_generator_spec(latent_dim: usize, hidden: &[usize]) -> Result<MlpSpec> {
    let mut layers = vec![latent_dim];
    layers.extend_from_slice(hidden);
    layers.push(2);
    MlpSpec::new(layers, Activation::Relu, Activation::Identity)
}

/// Default critic architecture: 2 -> 3 x 128 leaky-relu(0.2) -> 1.
pub fn default_critic_spec(hidden: &[usize]) -> Result<MlpSpec> {
    let mut layers = vec![2];
    layers.extend_from_slice(hidden);
    layers.push(1);
    MlpSpec::new(layers, Activation::LeakyRelu { slope: 0.2 }, Activation::Identity)
}

/// Default importance-net architecture: d -> 4 x width relu -> 1, relu output
/// so weights are non-negative.
pub fn default_importance_spec(latent_dim: usize, hidden: &[usize]) -> Result<MlpSpec> {
    let mut layers = vec![latent_dim];
    layers.extend_from_slice(hidden);
    layers.push(1);
    MlpSpec::new(layers, Activation::Relu, Activation::Relu)
}
