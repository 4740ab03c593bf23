//! Post-training samplers.
//!
//! The proposed family works in latent space on the importance weights:
//! rejection sampling with acceptance w(z)/m, gradient ascent on w, and
//! their sequential combination. The density-ratio baselines (DRS, SIR,
//! independent MH) and critic-driven transport (DOT) operate on generated
//! points instead.
//!
//! Samplers are generic over plain closures for the scores they consume, so
//! their distributional correctness is testable against exact hand-built
//! targets; [`ScalarField`] adapts a network (or a critic-generator
//! composition) into such closures with graph-backed gradients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{eval, Bindings, Graph, NodeId};
use crate::nn::{
    build_mlp, AdamState, LatentPrior, Mlp, ParamMode, PriorKind, prior_sample,
};
use crate::synthdata::Dataset2D;
use crate::tensor::Tensor;
use crate::wgan::{sample_batch, DIVERGENCE_GUARD};
use crate::{Error, Result};

/// Default draw budget for rejection-style samplers.
pub const DEFAULT_MAX_DRAWS: usize = 10_000;

/// Gradient-ascent settings shared by latentGA and DOT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// Number of ascent steps N.
    pub steps: usize,
    /// Step size epsilon.
    pub step_size: f64,
    /// Apply the Gaussian latent projection step.
    pub project: bool,
    /// Use the exact orthogonal projection (divide by ||z||^2) instead of
    /// the sqrt(d) form.
    #[serde(default)]
    pub exact_projection: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            steps: 10,
            step_size: 0.05,
            project: false,
            exact_projection: false,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_size <= 0.0 {
            return Err(Error::config("gradient-ascent step size must be > 0"));
        }
        Ok(())
    }
}

/// Result of a rejection sampler: the accepted point and how many draws it
/// took (for acceptance-rate logging).
#[derive(Debug, Clone, PartialEq)]
pub struct RsOutcome {
    pub z: Vec<f64>,
    pub draws: usize,
}

/// Latent rejection sampling: draw z from the prior and accept when
/// w(z)/m >= u with u ~ U[0, 1). When w <= m everywhere, accepted latents
/// follow the normalized law w * gamma.
pub fn latent_rs<R, W>(
    weight: W,
    prior: &LatentPrior,
    cap_m: f64,
    rng: &mut R,
    max_draws: usize,
) -> Result<RsOutcome>
where
    R: Rng,
    W: Fn(&[f64]) -> f64,
{
    if cap_m <= 0.0 {
        return Err(Error::config("latent_rs needs m > 0"));
    }
    for draw in 1..=max_draws {
        let z = prior_sample(prior, 1, rng)?.into_values();
        let u: f64 = rng.random::<f64>();
        if weight(&z) / cap_m >= u {
            return Ok(RsOutcome { z, draws: draw });
        }
    }
    Err(Error::Starvation { method: "latent_rs", draws: max_draws })
}

/// Projected gradient used by the Gaussian latent ascent:
/// g - (g . z) z / sqrt(d), or g - (g . z) z / ||z||^2 in exact mode.
pub fn project_gradient(grad: &[f64], z: &[f64], exact: bool) -> Vec<f64> {
    let dot: f64 = grad.iter().zip(z).map(|(g, zi)| g * zi).sum();
    let denom = if exact {
        let norm_sq: f64 = z.iter().map(|v| v * v).sum();
        if norm_sq == 0.0 {
            return grad.to_vec();
        }
        norm_sq
    } else {
        (z.len() as f64).sqrt()
    };
    grad.iter()
        .zip(z)
        .map(|(g, zi)| g - dot * zi / denom)
        .collect()
}

/// Latent gradient ascent: N steps of z <- z + eps * grad w(z), with the
/// projection applied when the prior is Gaussian and projection is on.
pub fn latent_ga<G>(
    weight_grad: G,
    prior: &LatentPrior,
    z0: &[f64],
    cfg: &GaConfig,
) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if z0.len() != prior.dim {
        return Err(Error::config("latent_ga start point has wrong dimension"));
    }
    let mut z = z0.to_vec();
    for _ in 0..cfg.steps {
        let mut g = weight_grad(&z)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite gradient in latent ascent"));
        }
        if cfg.project && prior.kind == PriorKind::Gaussian {
            g = project_gradient(&g, &z, cfg.exact_projection);
        }
        for (zi, gi) in z.iter_mut().zip(&g) {
            *zi += cfg.step_size * gi;
        }
    }
    Ok(z)
}

/// latentRS followed by latentGA from the accepted latent.
pub fn latent_rs_ga<R, W, G>(
    weight: W,
    weight_grad: G,
    prior: &LatentPrior,
    cap_m: f64,
    cfg: &GaConfig,
    rng: &mut R,
    max_draws: usize,
) -> Result<RsOutcome>
where
    R: Rng,
    W: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let accepted = latent_rs(weight, prior, cap_m, rng, max_draws)?;
    let z = latent_ga(weight_grad, prior, &accepted.z, cfg)?;
    Ok(RsOutcome { z, draws: accepted.draws })
}

// ── density-ratio baselines ──────────────────────────────────────────────

/// Calibrated real-vs-fake classifier: the critic network fine-tuned with
/// a binary objective, read through a sigmoid head.
#[derive(Debug, Clone)]
pub struct RatioModel {
    pub logit: Mlp,
    pub sigmoid_head: bool,
}

impl RatioModel {
    /// Classifier probability in (0, 1), clamped to at most 1 - 1e-6 so
    /// ratios stay finite.
    pub fn prob(&self, x: &[f64]) -> Result<f64> {
        let t = Tensor::new(1, x.len(), x.to_vec())?;
        let raw = self.logit.forward(&t)?.get(0, 0);
        let p = if self.sigmoid_head { 1.0 / (1.0 + (-raw).exp()) } else { raw };
        Ok(p.min(1.0 - 1e-6))
    }

    /// Density ratio p / (1 - p).
    pub fn ratio(&self, x: &[f64]) -> Result<f64> {
        density_ratio_from_prob(self.prob(x)?)
    }
}

/// r = p / (1 - p) for a classifier probability p (already clamped).
pub fn density_ratio_from_prob(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::config(format!(
            "classifier probability {p} outside [0, 1)"
        )));
    }
    Ok(p / (1.0 - p))
}

/// Density ratio of a point under a ratio model.
pub fn density_ratio(model: &RatioModel, x: &[f64]) -> Result<f64> {
    model.ratio(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gp_weight: f64,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            steps: 500,
            batch_size: 128,
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            gp_weight: 10.0,
            seed: 0,
        }
    }
}

/// Fine-tunes the critic into a real-vs-fake classifier with the binary
/// cross-entropy loss (logit form), keeping the gradient penalty as a
/// regularizer. Deterministic per config seed.
pub fn finetune_bce(
    critic: &Mlp,
    generator: &Mlp,
    dataset: &Dataset2D,
    prior: &LatentPrior,
    cfg: &FinetuneConfig,
) -> Result<RatioModel> {
    if cfg.batch_size < 2 {
        return Err(Error::config("finetune batch_size must be >= 2"));
    }
    let mut model = critic.clone();
    if cfg.steps == 0 {
        return Ok(RatioModel { logit: model, sigmoid_head: true });
    }
    let mut state = AdamState::new(&model.params, cfg.lr, cfg.beta1, cfg.beta2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(4));

    let program = BceProgram::build(&model.spec, cfg.batch_size, cfg.gp_weight)?;
    for step in 0..cfg.steps {
        let real = sample_batch(dataset, cfg.batch_size, &mut rng);
        let z = prior_sample(prior, cfg.batch_size, &mut rng)?;
        let fake = generator.forward(&z)?;
        let loss = program.step(&mut model, &mut state, &real, &fake, &mut rng)?;
        if loss.abs() > DIVERGENCE_GUARD {
            return Err(Error::Divergence { step, value: loss });
        }
    }
    Ok(RatioModel { logit: model, sigmoid_head: true })
}

/// BCE-with-logits fine-tuning step: softplus(-D(real)) + softplus(D(fake))
/// averaged, plus the usual gradient penalty on interpolates.
struct BceProgram {
    graph: Graph,
    batch: usize,
    loss: NodeId,
    grads: Vec<NodeId>,
    n_layers: usize,
}

impl BceProgram {
    fn build(spec: &crate::nn::MlpSpec, batch: usize, gp_weight: f64) -> Result<Self> {
        let mut g = Graph::new();
        let x_real = g.input("x_real", batch, 2)?;
        let x_fake = g.input("x_fake", batch, 2)?;
        let x_hat = g.input("x_hat", batch, 2)?;
        let d_real = build_mlp(&mut g, spec, x_real, ParamMode::Trainable { prefix: "d" })?;
        let params = d_real.params.clone();

        let reuse = |g: &mut Graph, input| -> Result<NodeId> {
            let mut h = input;
            let last = spec.n_layers() - 1;
            for (i, &(w, b)) in params.iter().enumerate() {
                let mm = g.matmul(h, w)?;
                let pre = g.add_bias(mm, b)?;
                h = if i == last {
                    match spec.output {
                        crate::nn::Activation::Identity => pre,
                        _ => return Err(Error::config("BCE fine-tuning expects identity head")),
                    }
                } else {
                    match spec.hidden {
                        crate::nn::Activation::Relu => g.relu(pre)?,
                        crate::nn::Activation::LeakyRelu { slope } => g.leaky_relu(pre, slope)?,
                        crate::nn::Activation::Tanh => g.tanh(pre)?,
                        crate::nn::Activation::Identity => pre,
                    }
                };
            }
            Ok(h)
        };
        let d_fake = reuse(&mut g, x_fake)?;
        let d_hat = reuse(&mut g, x_hat)?;

        let neg_real = g.scale(d_real.output, -1.0)?;
        let sp_real = g.softplus(neg_real)?;
        let sp_fake = g.softplus(d_fake)?;
        let loss_real = g.mean_all(sp_real)?;
        let loss_fake = g.mean_all(sp_fake)?;
        let bce = g.add(loss_real, loss_fake)?;

        let sum_hat = g.sum_all(d_hat)?;
        let grad_hat = g.grad(sum_hat, &[x_hat])?[0];
        let sq = g.square(grad_hat)?;
        let row = g.sum_cols(sq)?;
        let norm = g.sqrt(row)?;
        let dev = g.add_scalar(norm, -1.0)?;
        let dev_sq = g.square(dev)?;
        let gp = g.mean_all(dev_sq)?;
        let gp_term = g.scale(gp, gp_weight)?;
        let loss = g.add(bce, gp_term)?;

        let wrt: Vec<NodeId> = params.iter().flat_map(|&(w, b)| [w, b]).collect();
        let grads = g.grad(loss, &wrt)?;
        Ok(BceProgram { graph: g, batch, loss, grads, n_layers: params.len() })
    }

    fn step<R: Rng>(
        &self,
        model: &mut Mlp,
        state: &mut AdamState,
        real: &Tensor,
        fake: &Tensor,
        rng: &mut R,
    ) -> Result<f64> {
        let mut x_hat = Tensor::zeros(self.batch, 2);
        for i in 0..self.batch {
            let u: f64 = rng.random::<f64>();
            x_hat.set(i, 0, u * real.get(i, 0) + (1.0 - u) * fake.get(i, 0));
            x_hat.set(i, 1, u * real.get(i, 1) + (1.0 - u) * fake.get(i, 1));
        }
        let mut b = Bindings::new();
        b.set("x_real", real.clone());
        b.set("x_fake", fake.clone());
        b.set("x_hat", x_hat);
        crate::nn::bind_params(&mut b, "d", &model.params);
        let mut targets = vec![self.loss];
        targets.extend(&self.grads);
        let mut values = eval(&self.graph, &targets, &b)?;
        let grad_tensors = values.split_off(1);
        let mut it = grad_tensors.into_iter();
        let layer_grads: Vec<_> = (0..self.n_layers)
            .map(|_| (it.next().unwrap(), it.next().unwrap()))
            .collect();
        crate::nn::adam_step(&mut model.params, &layer_grads, state)?;
        Ok(values[0].get(0, 0))
    }
}

/// Discriminator rejection sampling: accept a candidate x with probability
/// min(1, r(x)/k).
pub fn drs<R, F, D>(
    ratio: F,
    mut draw: D,
    k: f64,
    rng: &mut R,
    max_draws: usize,
) -> Result<(Vec<f64>, usize)>
where
    R: Rng,
    F: Fn(&[f64]) -> f64,
    D: FnMut(&mut R) -> Result<Vec<f64>>,
{
    if k <= 0.0 {
        return Err(Error::config("drs needs k > 0"));
    }
    for attempt in 1..=max_draws {
        let x = draw(rng)?;
        let p = (ratio(&x) / k).min(1.0);
        let u: f64 = rng.random::<f64>();
        if p >= u {
            return Ok((x, attempt));
        }
    }
    Err(Error::Starvation { method: "drs", draws: max_draws })
}

/// Largest density ratio over a calibration batch of generated points;
/// used to set the DRS constant k.
pub fn estimate_ratio_max<R: Rng>(
    model: &RatioModel,
    generator: &Mlp,
    prior: &LatentPrior,
    draws: usize,
    rng: &mut R,
) -> Result<f64> {
    let z = prior_sample(prior, draws, rng)?;
    let x = generator.forward(&z)?;
    let mut best = 0.0f64;
    for i in 0..x.rows() {
        best = best.max(model.ratio(x.row(i))?);
    }
    Ok(best)
}

/// Sampling-importance-resampling: draw `candidates` points and keep one
/// with probability proportional to its ratio.
pub fn sir<R, F, D>(
    ratio: F,
    mut draw: D,
    candidates: usize,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    R: Rng,
    F: Fn(&[f64]) -> f64,
    D: FnMut(&mut R) -> Result<Vec<f64>>,
{
    if candidates == 0 {
        return Err(Error::config("sir needs at least one candidate"));
    }
    let points: Vec<Vec<f64>> = (0..candidates)
        .map(|_| draw(rng))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = points.iter().map(|p| ratio(p)).collect();
    let total: f64 = ratios.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "sir: all candidate ratios are zero".to_string(),
        ));
    }
    let mut target = rng.random::<f64>() * total;
    for (point, r) in points.iter().zip(&ratios) {
        target -= r;
        if target <= 0.0 {
            return Ok(point.clone());
        }
    }
    Ok(points.last().expect("candidates >= 1").clone())
}

/// Independent Metropolis-Hastings on the proposal: the chain starts from
/// a fresh draw (re-drawn up to 100 times if its ratio is zero) and then
/// accepts each new proposal with probability min(1, r'/r). `chain_len`
/// counts proposals including the initial draw, so a length-1 chain
/// returns the first proposal.
pub fn mh<R, F, D>(
    ratio: F,
    mut draw: D,
    chain_len: usize,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    R: Rng,
    F: Fn(&[f64]) -> f64,
    D: FnMut(&mut R) -> Result<Vec<f64>>,
{
    if chain_len == 0 {
        return Err(Error::config("mh needs chain_len >= 1"));
    }
    let mut state = draw(rng)?;
    let mut state_ratio = ratio(&state);
    let mut redraws = 0;
    while state_ratio <= 0.0 {
        redraws += 1;
        if redraws > 100 {
            return Err(Error::Starvation { method: "mh", draws: redraws });
        }
        state = draw(rng)?;
        state_ratio = ratio(&state);
    }
    for _ in 1..chain_len {
        let proposal = draw(rng)?;
        let proposal_ratio = ratio(&proposal);
        let accept = (proposal_ratio / state_ratio).min(1.0);
        let u: f64 = rng.random::<f64>();
        if accept >= u {
            state = proposal;
            state_ratio = proposal_ratio;
        }
    }
    Ok(state)
}

/// Discriminator optimal transport, latent form: ascend D(G(z)) in latent
/// space (same projection convention as latentGA) and return G(z_final).
pub fn dot(
    field: &ScalarField,
    generator: &Mlp,
    prior: &LatentPrior,
    z0: &[f64],
    cfg: &GaConfig,
) -> Result<Vec<f64>> {
    let z = latent_ga(|z| field.gradient(z), prior, z0, cfg)?;
    let out = generator.forward(&Tensor::new(1, z.len(), z)?)?;
    Ok(out.row(0).to_vec())
}

/// A scalar function of a latent point with graph-backed gradients, built
/// once and evaluated many times.
pub struct ScalarField {
    graph: Graph,
    dim: usize,
    out: NodeId,
    grad: NodeId,
}

impl ScalarField {
    /// Field z -> net(z) for a net with a single output.
    pub fn for_net(net: &Mlp) -> Result<Self> {
        if net.spec.output_dim() != 1 {
            return Err(Error::config("scalar field needs a single-output net"));
        }
        let dim = net.spec.input_dim();
        let mut g = Graph::new();
        let z = g.input("z", 1, dim)?;
        let nodes = build_mlp(&mut g, &net.spec, z, ParamMode::Frozen(&net.params))?;
        let grad = g.grad(nodes.output, &[z])?[0];
        Ok(ScalarField { graph: g, dim, out: nodes.output, grad })
    }

    /// Field z -> critic(generator(z)).
    pub fn for_composition(generator: &Mlp, critic: &Mlp) -> Result<Self> {
        if critic.spec.output_dim() != 1 {
            return Err(Error::config("scalar field needs a single-output critic"));
        }
        let dim = generator.spec.input_dim();
        let mut g = Graph::new();
        let z = g.input("z", 1, dim)?;
        let gen = build_mlp(&mut g, &generator.spec, z, ParamMode::Frozen(&generator.params))?;
        let crit = build_mlp(&mut g, &critic.spec, gen.output, ParamMode::Frozen(&critic.params))?;
        let grad = g.grad(crit.output, &[z])?[0];
        Ok(ScalarField { graph: g, dim, out: crit.output, grad })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, z: &[f64]) -> Result<f64> {
        let mut b = Bindings::new();
        b.set("z", Tensor::new(1, self.dim, z.to_vec())?);
        Ok(crate::autodiff::eval_one(&self.graph, self.out, &b)?.get(0, 0))
    }

    pub fn gradient(&self, z: &[f64]) -> Result<Vec<f64>> {
        let mut b = Bindings::new();
        b.set("z", Tensor::new(1, self.dim, z.to_vec())?);
        Ok(crate::autodiff::eval_one(&self.graph, self.grad, &b)?.into_values())
    }
}
