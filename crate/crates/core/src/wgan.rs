//! WGAN-GP pretraining of the generator/critic pair.
//!
//! The critic maximizes mean D(x) - mean D(G(z)) minus a two-sided gradient
//! penalty on random interpolates; the generator minimizes -mean D(G(z)).
//! The same critic program also accepts per-sample weights on the fake term,
//! which is what adversarial importance-weight training needs; plain
//! pretraining binds weights identically equal to one.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{eval, Bindings, Graph, NodeId};
use crate::nn::{
    adam_step, bind_params, build_mlp, AdamState, LatentPrior, Mlp, MlpSpec, ParamMode,
    prior_sample,
};
use crate::synthdata::Dataset2D;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Magnitude of the critic objective beyond which training aborts.
pub const DIVERGENCE_GUARD: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WganConfig {
    /// Critic updates per generator update (n_d).
    pub critic_steps: usize,
    pub gp_weight: f64,
    pub batch_size: usize,
    pub generator_steps: usize,
    pub lr_generator: f64,
    pub lr_critic: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub seed: u64,
}

impl Default for WganConfig {
    fn default() -> Self {
        WganConfig {
            critic_steps: 5,
            gp_weight: 10.0,
            batch_size: 128,
            generator_steps: 20_000,
            lr_generator: 1e-4,
            lr_critic: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            seed: 0,
        }
    }
}

impl WganConfig {
    pub fn validate(&self) -> Result<()> {
        if self.critic_steps == 0 {
            return Err(Error::config("critic_steps (n_d) must be >= 1"));
        }
        if self.gp_weight < 0.0 {
            return Err(Error::config("gp_weight must be >= 0"));
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch_size must be >= 2"));
        }
        Ok(())
    }
}

/// Per-generator-step log entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WganRecord {
    pub step: usize,
    pub critic_objective: f64,
    pub gp: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CriticStats {
    /// Weighted Wasserstein estimate: mean D(x) - mean w D(G(z)).
    pub objective: f64,
    pub gp: f64,
}

/// Prebuilt critic-update computation, reusable across steps.
///
/// Inputs: `x_real`, `x_fake`, `x_hat` (b x 2), `w` (b x 1 weights on the
/// fake term) and the critic parameters. The loss is
/// -(mean D(real) - mean w D(fake)) + gp_weight * penalty.
pub(crate) struct CriticProgram {
    graph: Graph,
    batch: usize,
    emd: NodeId,
    gp: NodeId,
    grads: Vec<NodeId>,
    n_layers: usize,
}

impl CriticProgram {
    pub(crate) fn build(critic_spec: &MlpSpec, batch: usize, gp_weight: f64) -> Result<Self> {
        let mut g = Graph::new();
        let x_real = g.input("x_real", batch, 2)?;
        let x_fake = g.input("x_fake", batch, 2)?;
        let x_hat = g.input("x_hat", batch, 2)?;
        let w = g.input("w", batch, 1)?;

        let d_real = build_mlp(&mut g, critic_spec, x_real, ParamMode::Trainable { prefix: "d" })?;
        let params = d_real.params.clone();
        let shared = |g: &mut Graph, input| {
            // Reuse the same parameter nodes for the other forward passes.
            build_mlp_with_params(g, critic_spec, input, &params)
        };
        let d_fake = shared(&mut g, x_fake)?;
        let d_hat = shared(&mut g, x_hat)?;

        let mean_real = g.mean_all(d_real.output)?;
        let weighted_fake = g.mul(w, d_fake)?;
        let mean_fake = g.mean_all(weighted_fake)?;
        let emd = g.sub(mean_real, mean_fake)?;

        // Gradient penalty: mean over rows of (||grad_xhat D|| - 1)^2.
        let sum_hat = g.sum_all(d_hat)?;
        let grad_hat = g.grad(sum_hat, &[x_hat])?[0];
        let sq = g.square(grad_hat)?;
        let row_sq = g.sum_cols(sq)?;
        let norm = g.sqrt(row_sq)?;
        let dev = g.add_scalar(norm, -1.0)?;
        let dev_sq = g.square(dev)?;
        let gp = g.mean_all(dev_sq)?;

        let neg_emd = g.scale(emd, -1.0)?;
        let gp_term = g.scale(gp, gp_weight)?;
        let loss = g.add(neg_emd, gp_term)?;

        let wrt: Vec<NodeId> = params.iter().flat_map(|&(w, b)| [w, b]).collect();
        let grads = g.grad(loss, &wrt)?;

        Ok(CriticProgram {
            graph: g,
            batch,
            emd,
            gp,
            grads,
            n_layers: params.len(),
        })
    }

    /// One Adam ascent step on the critic. `weights` defaults to ones.
    pub(crate) fn step<R: Rng>(
        &self,
        critic: &mut Mlp,
        state: &mut AdamState,
        real: &Tensor,
        fake: &Tensor,
        weights: Option<&Tensor>,
        rng: &mut R,
    ) -> Result<CriticStats> {
        if real.shape() != (self.batch, 2) || fake.shape() != (self.batch, 2) {
            return Err(Error::config(format!(
                "critic step expects {} x 2 batches, got {:?} and {:?}",
                self.batch,
                real.shape(),
                fake.shape()
            )));
        }
        let x_hat = interpolate(real, fake, rng);
        let w = match weights {
            Some(w) => {
                if w.shape() != (self.batch, 1) {
                    return Err(Error::config("weights must be batch x 1"));
                }
                w.clone()
            }
            None => Tensor::filled(self.batch, 1, 1.0),
        };

        let mut b = Bindings::new();
        b.set("x_real", real.clone());
        b.set("x_fake", fake.clone());
        b.set("x_hat", x_hat);
        b.set("w", w);
        bind_params(&mut b, "d", &critic.params);

        let mut targets = vec![self.emd, self.gp];
        targets.extend(&self.grads);
        let mut values = eval(&self.graph, &targets, &b)?;
        let grad_tensors: Vec<Tensor> = values.split_off(2);
        let stats = CriticStats {
            objective: values[0].get(0, 0),
            gp: values[1].get(0, 0),
        };

        let layer_grads = pair_up(grad_tensors, self.n_layers);
        adam_step(&mut critic.params, &layer_grads, state)?;
        Ok(stats)
    }
}

/// Prebuilt generator-update computation: minimizes -mean D(G(z)).
/// Critic parameters are bound per step but not differentiated.
pub(crate) struct GeneratorProgram {
    graph: Graph,
    batch: usize,
    loss: NodeId,
    grads: Vec<NodeId>,
    n_layers: usize,
}

impl GeneratorProgram {
    pub(crate) fn build(gen_spec: &MlpSpec, critic_spec: &MlpSpec, batch: usize) -> Result<Self> {
        let mut g = Graph::new();
        let z = g.input("z", batch, gen_spec.input_dim())?;
        let gen = build_mlp(&mut g, gen_spec, z, ParamMode::Trainable { prefix: "g" })?;
        let critic = build_mlp(&mut g, critic_spec, gen.output, ParamMode::Trainable { prefix: "d" })?;
        let mean = g.mean_all(critic.output)?;
        let loss = g.scale(mean, -1.0)?;
        let wrt: Vec<NodeId> = gen.params.iter().flat_map(|&(w, b)| [w, b]).collect();
        let grads = g.grad(loss, &wrt)?;
        Ok(GeneratorProgram {
            graph: g,
            batch,
            loss,
            grads,
            n_layers: gen.params.len(),
        })
    }

    pub(crate) fn step(
        &self,
        generator: &mut Mlp,
        state: &mut AdamState,
        critic: &Mlp,
        z: &Tensor,
    ) -> Result<f64> {
        if z.rows() != self.batch {
            return Err(Error::config("generator step batch size mismatch"));
        }
        let mut b = Bindings::new();
        b.set("z", z.clone());
        bind_params(&mut b, "g", &generator.params);
        bind_params(&mut b, "d", &critic.params);
        let mut targets = vec![self.loss];
        targets.extend(&self.grads);
        let mut values = eval(&self.graph, &targets, &b)?;
        let grad_tensors = values.split_off(1);
        let layer_grads = pair_up(grad_tensors, self.n_layers);
        adam_step(&mut generator.params, &layer_grads, state)?;
        Ok(values[0].get(0, 0))
    }
}

/// Builds an MLP forward pass reusing existing parameter nodes.
fn build_mlp_with_params(
    g: &mut Graph,
    spec: &MlpSpec,
    input: NodeId,
    params: &[(NodeId, NodeId)],
) -> Result<NodeId> {
    use crate::nn::Activation;
    let last = spec.n_layers() - 1;
    let mut h = input;
    for (i, &(w, b)) in params.iter().enumerate() {
        let mm = g.matmul(h, w)?;
        let pre = g.add_bias(mm, b)?;
        let act = if i == last { &spec.output } else { &spec.hidden };
        h = match act {
            Activation::Identity => pre,
            Activation::Relu => g.relu(pre)?,
            Activation::LeakyRelu { slope } => g.leaky_relu(pre, *slope)?,
            Activation::Tanh => g.tanh(pre)?,
        };
    }
    Ok(h)
}

fn pair_up(tensors: Vec<Tensor>, n_layers: usize) -> Vec<(Tensor, Tensor)> {
    debug_assert_eq!(tensors.len(), 2 * n_layers);
    let mut it = tensors.into_iter();
    (0..n_layers)
        .map(|_| (it.next().unwrap(), it.next().unwrap()))
        .collect()
}

/// Per-row interpolates u x + (1 - u) y with u ~ U[0, 1].
fn interpolate<R: Rng>(real: &Tensor, fake: &Tensor, rng: &mut R) -> Tensor {
    let mut out = Tensor::zeros(real.rows(), 2);
    for i in 0..real.rows() {
        let u: f64 = rng.random::<f64>();
        out.set(i, 0, u * real.get(i, 0) + (1.0 - u) * fake.get(i, 0));
        out.set(i, 1, u * real.get(i, 1) + (1.0 - u) * fake.get(i, 1));
    }
    out
}

/// Standalone gradient-penalty value: mean over the batch of
/// (||grad_xhat D(xhat)||_2 - 1)^2 with fresh per-row interpolation draws.
pub fn gradient_penalty<R: Rng>(
    critic: &Mlp,
    real: &Tensor,
    fake: &Tensor,
    rng: &mut R,
) -> Result<f64> {
    if real.shape() != fake.shape() || real.cols() != 2 {
        return Err(Error::config("gradient_penalty expects matching n x 2 batches"));
    }
    let x_hat = interpolate(real, fake, rng);
    gradient_penalty_at(critic, &x_hat)
}

/// Gradient-penalty value at explicit interpolates (used by tests that
/// need to control the draw).
pub fn gradient_penalty_at(critic: &Mlp, x_hat: &Tensor) -> Result<f64> {
    let mut g = Graph::new();
    let x = g.input("x_hat", x_hat.rows(), 2)?;
    let d = build_mlp(&mut g, &critic.spec, x, ParamMode::Frozen(&critic.params))?;
    let sum = g.sum_all(d.output)?;
    let grad_x = g.grad(sum, &[x])?[0];
    let sq = g.square(grad_x)?;
    let row = g.sum_cols(sq)?;
    let norm = g.sqrt(row)?;
    let dev = g.add_scalar(norm, -1.0)?;
    let dev_sq = g.square(dev)?;
    let pen = g.mean_all(dev_sq)?;
    let mut b = Bindings::new();
    b.set("x_hat", x_hat.clone());
    Ok(crate::autodiff::eval_one(&g, pen, &b)?.get(0, 0))
}

/// One critic ascent step on E D(x) - E D(G(z)) - gp_weight * GP, with the
/// generator frozen.
pub fn critic_step<R: Rng>(
    critic: &mut Mlp,
    state: &mut AdamState,
    generator: &Mlp,
    real: &Tensor,
    z: &Tensor,
    cfg: &WganConfig,
    rng: &mut R,
) -> Result<CriticStats> {
    cfg.validate()?;
    let fake = generator.forward(z)?;
    let program = CriticProgram::build(&critic.spec, real.rows(), cfg.gp_weight)?;
    program.step(critic, state, real, &fake, None, rng)
}

/// One generator descent step on -E D(G(z)), with the critic frozen.
pub fn generator_step(
    generator: &mut Mlp,
    state: &mut AdamState,
    critic: &Mlp,
    z: &Tensor,
) -> Result<f64> {
    let program = GeneratorProgram::build(&generator.spec, &critic.spec, z.rows())?;
    program.step(generator, state, critic, z)
}

/// Deterministic initial nets for a pretraining run.
pub fn init_nets(gen_spec: &MlpSpec, critic_spec: &MlpSpec, seed: u64) -> Result<(Mlp, Mlp)> {
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let g_seed = seeder.random::<u64>();
    let d_seed = seeder.random::<u64>();
    Ok((Mlp::init(gen_spec.clone(), g_seed)?, Mlp::init(critic_spec.clone(), d_seed)?))
}

/// Full WGAN-GP pretraining loop: alternates `critic_steps` critic updates
/// with one generator update, `generator_steps` times. Deterministic per
/// config seed. Aborts with a divergence error if the critic objective
/// leaves [-1e3, 1e3].
pub fn pretrain(
    dataset: &Dataset2D,
    prior: &LatentPrior,
    gen_spec: &MlpSpec,
    critic_spec: &MlpSpec,
    cfg: &WganConfig,
) -> Result<(Mlp, Mlp, Vec<WganRecord>)> {
    cfg.validate()?;
    prior.validate()?;
    if gen_spec.input_dim() != prior.dim {
        return Err(Error::config("generator input dim must match prior dim"));
    }
    let (mut generator, mut critic) = init_nets(gen_spec, critic_spec, cfg.seed)?;
    let mut g_state = AdamState::new(&generator.params, cfg.lr_generator, cfg.beta1, cfg.beta2)?;
    let mut d_state = AdamState::new(&critic.params, cfg.lr_critic, cfg.beta1, cfg.beta2)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let critic_program = CriticProgram::build(critic_spec, cfg.batch_size, cfg.gp_weight)?;
    let generator_program = GeneratorProgram::build(gen_spec, critic_spec, cfg.batch_size)?;

    let mut log = Vec::with_capacity(cfg.generator_steps);
    for step in 0..cfg.generator_steps {
        let mut last = CriticStats { objective: 0.0, gp: 0.0 };
        for _ in 0..cfg.critic_steps {
            let real = sample_batch(dataset, cfg.batch_size, &mut rng);
            let z = prior_sample(prior, cfg.batch_size, &mut rng)?;
            let fake = generator.forward(&z)?;
            last = critic_program.step(&mut critic, &mut d_state, &real, &fake, None, &mut rng)?;
            if last.objective.abs() > DIVERGENCE_GUARD {
                return Err(Error::Divergence { step, value: last.objective });
            }
        }
        let z = prior_sample(prior, cfg.batch_size, &mut rng)?;
        generator_program.step(&mut generator, &mut g_state, &critic, &z)?;
        log.push(WganRecord {
            step,
            critic_objective: last.objective,
            gp: last.gp,
        });
    }
    Ok((generator, critic, log))
}

/// Batch of dataset rows drawn with replacement.
pub fn sample_batch<R: Rng>(dataset: &Dataset2D, batch: usize, rng: &mut R) -> Tensor {
    let mut out = Tensor::zeros(batch, 2);
    for i in 0..batch {
        let j = rng.random_range(0..dataset.points.rows());
        out.set(i, 0, dataset.points.get(j, 0));
        out.set(i, 1, dataset.points.get(j, 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::emd;
    use crate::nn::{default_critic_spec, default_generator_spec};
    use crate::synthdata::sample_gaussian_grid;
    use crate::testutil::{linear_mlp, zero_critic};

    fn unit_linear_critic() -> Mlp {
        // D(x) = v . x with ||v|| = 1.
        let v = Tensor::new(2, 1, vec![0.6, 0.8]).unwrap();
        linear_mlp(&v)
    }

    fn random_points(n: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor::new(n, 2, values).unwrap()
    }

    #[test]
    fn gp_of_unit_gradient_critic_is_zero() {
        let critic = unit_linear_critic();
        let real = random_points(32, 1);
        let fake = random_points(32, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gp = gradient_penalty(&critic, &real, &fake, &mut rng).unwrap();
        assert!(gp.abs() < 1e-24, "gp {gp}");
    }

    #[test]
    fn gp_of_zero_critic_is_one() {
        let critic = zero_critic();
        let real = random_points(16, 4);
        let fake = random_points(16, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gp = gradient_penalty(&critic, &real, &fake, &mut rng).unwrap();
        assert_eq!(gp, 1.0);
    }

    #[test]
    fn gp_matches_numeric_gradient_recomputation() {
        // Independent oracle: finite-difference input gradients of the
        // critic at the same interpolates.
        let spec = default_critic_spec(&[8, 8]).unwrap();
        let critic = Mlp::init(spec, 12).unwrap();
        let real = random_points(8, 7);
        let fake = random_points(8, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x_hat = super::interpolate(&real, &fake, &mut rng);

        let gp = gradient_penalty_at(&critic, &x_hat).unwrap();

        let h = 1e-6;
        let mut penalty = 0.0;
        for i in 0..x_hat.rows() {
            let mut sq_norm = 0.0;
            for j in 0..2 {
                let mut plus = x_hat.clone();
                plus.set(i, j, plus.get(i, j) + h);
                let mut minus = x_hat.clone();
                minus.set(i, j, minus.get(i, j) - h);
                let dp = critic.forward(&plus).unwrap().get(i, 0);
                let dm = critic.forward(&minus).unwrap().get(i, 0);
                let g = (dp - dm) / (2.0 * h);
                sq_norm += g * g;
            }
            let dev = sq_norm.sqrt() - 1.0;
            penalty += dev * dev;
        }
        penalty /= x_hat.rows() as f64;
        let scale = gp.abs().max(penalty.abs()).max(1e-12);
        assert!((gp - penalty).abs() / scale <= 1e-6, "gp {gp} vs oracle {penalty}");
    }

    #[test]
    fn gp_batch_mismatch_rejected() {
        let critic = unit_linear_critic();
        let real = random_points(8, 1);
        let fake = random_points(9, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gradient_penalty(&critic, &real, &fake, &mut rng).is_err());
    }

    #[test]
    fn critic_objective_is_mean_difference_for_linear_critic() {
        // gp weight 0, 1-Lipschitz linear critic: objective equals the
        // empirical mean difference.
        let critic = unit_linear_critic();
        let real = random_points(32, 10);
        let fake = random_points(32, 11);
        let program = CriticProgram::build(&critic.spec, 32, 0.0).unwrap();
        let mut c = critic.clone();
        let mut state = AdamState::new(&c.params, 0.0, 0.5, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let stats = program
            .step(&mut c, &mut state, &real, &fake, None, &mut rng)
            .unwrap();
        let hand = |t: &Tensor| {
            let mut s = 0.0;
            for i in 0..t.rows() {
                s += 0.6 * t.get(i, 0) + 0.8 * t.get(i, 1);
            }
            s / t.rows() as f64
        };
        let expected = hand(&real) - hand(&fake);
        assert!((stats.objective - expected).abs() < 1e-12);
    }

    #[test]
    fn critic_step_zero_lr_is_noop() {
        let spec = default_critic_spec(&[8]).unwrap();
        let mut critic = Mlp::init(spec, 3).unwrap();
        let before = critic.params.clone();
        let mut state = AdamState::new(&critic.params, 0.0, 0.5, 0.9).unwrap();
        let generator = linear_mlp(&Tensor::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let real = random_points(8, 1);
        let z = random_points(8, 2);
        let cfg = WganConfig { batch_size: 8, ..WganConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        critic_step(&mut critic, &mut state, &generator, &real, &z, &cfg, &mut rng).unwrap();
        assert_eq!(critic.params, before);
    }

    #[test]
    fn critic_first_step_follows_hand_gradient_signs() {
        // With a frozen featurized critic, the objective gradient w.r.t.
        // each output weight is mean h_j(real) - mean h_j(fake); Adam's
        // first step moves each weight by +lr * sign(gradient) (up to eps).
        let critic = unit_linear_critic();
        let real = random_points(16, 20);
        let fake = random_points(16, 21);
        let lr = 1e-3;
        let program = CriticProgram::build(&critic.spec, 16, 0.0).unwrap();
        let mut c = critic.clone();
        let mut state = AdamState::new(&c.params, lr, 0.5, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        program.step(&mut c, &mut state, &real, &fake, None, &mut rng).unwrap();

        // Hidden features: h = relu([x, -x]) with the fixed first layer.
        let feats = |t: &Tensor, j: usize| {
            let mut s = 0.0;
            for i in 0..t.rows() {
                let x = [t.get(i, 0), t.get(i, 1)];
                let pre = [x[0], x[1], -x[0], -x[1]];
                s += pre[j].max(0.0);
            }
            s / t.rows() as f64
        };
        for j in 0..4 {
            let hand = feats(&real, j) - feats(&fake, j);
            if hand.abs() < 1e-9 {
                continue;
            }
            let moved = c.params.layers[1].0.get(j, 0) - critic.params.layers[1].0.get(j, 0);
            assert!(
                (moved - lr * hand.signum()).abs() < lr * 1e-3,
                "weight {j}: moved {moved}, gradient {hand}"
            );
        }
    }

    #[test]
    fn generator_step_zero_lr_is_noop() {
        let gen_spec = default_generator_spec(2, &[8]).unwrap();
        let critic_spec = default_critic_spec(&[8]).unwrap();
        let mut generator = Mlp::init(gen_spec, 1).unwrap();
        let critic = Mlp::init(critic_spec, 2).unwrap();
        let before = generator.params.clone();
        let mut state = AdamState::new(&generator.params, 0.0, 0.5, 0.9).unwrap();
        let z = random_points(8, 3);
        generator_step(&mut generator, &mut state, &critic, &z).unwrap();
        assert_eq!(generator.params, before);
    }

    #[test]
    fn generator_step_descends_on_linear_critic() {
        // D(x) = x_0: pushing generator outputs toward larger x_0 raises
        // E D(G(z)), so one step must increase it.
        let v = Tensor::new(2, 1, vec![1.0, 0.0]).unwrap();
        let critic = linear_mlp(&v);
        let gen_spec = default_generator_spec(2, &[8]).unwrap();
        let mut generator = Mlp::init(gen_spec, 5).unwrap();
        let mut state = AdamState::new(&generator.params, 1e-2, 0.5, 0.9).unwrap();
        let z = random_points(32, 6);
        let before = critic.forward(&generator.forward(&z).unwrap()).unwrap().mean_all();
        generator_step(&mut generator, &mut state, &critic, &z).unwrap();
        let after = critic.forward(&generator.forward(&z).unwrap()).unwrap().mean_all();
        assert!(after > before, "before {before}, after {after}");
    }

    #[test]
    fn pretrain_zero_steps_returns_initial_nets() {
        let data = sample_gaussian_grid(64, 1, 1, 0.5, 0.05, 7).unwrap();
        let prior = LatentPrior::gaussian(2);
        let gen_spec = default_generator_spec(2, &[8]).unwrap();
        let critic_spec = default_critic_spec(&[8]).unwrap();
        let cfg = WganConfig {
            generator_steps: 0,
            batch_size: 16,
            seed: 42,
            ..WganConfig::default()
        };
        let (g, d, log) = pretrain(&data, &prior, &gen_spec, &critic_spec, &cfg).unwrap();
        let (g0, d0) = init_nets(&gen_spec, &critic_spec, 42).unwrap();
        assert_eq!(g.params, g0.params);
        assert_eq!(d.params, d0.params);
        assert!(log.is_empty());
    }

    #[test]
    fn pretrain_is_deterministic() {
        let data = sample_gaussian_grid(64, 1, 1, 0.5, 0.05, 7).unwrap();
        let prior = LatentPrior::gaussian(2);
        let gen_spec = default_generator_spec(2, &[8]).unwrap();
        let critic_spec = default_critic_spec(&[8]).unwrap();
        let cfg = WganConfig {
            generator_steps: 5,
            batch_size: 8,
            critic_steps: 2,
            seed: 9,
            ..WganConfig::default()
        };
        let (g1, d1, _) = pretrain(&data, &prior, &gen_spec, &critic_spec, &cfg).unwrap();
        let (g2, d2, _) = pretrain(&data, &prior, &gen_spec, &critic_spec, &cfg).unwrap();
        assert_eq!(g1.params, g2.params);
        assert_eq!(d1.params, d2.params);
    }

    #[test]
    fn pretrain_improves_emd_on_single_blob() {
        let data = sample_gaussian_grid(512, 1, 1, 0.5, 0.05, 7).unwrap();
        let prior = LatentPrior::gaussian(2);
        let gen_spec = default_generator_spec(2, &[16, 16]).unwrap();
        let critic_spec = default_critic_spec(&[16, 16]).unwrap();
        let cfg = WganConfig {
            generator_steps: 600,
            batch_size: 32,
            critic_steps: 3,
            lr_generator: 2e-4,
            lr_critic: 4e-4,
            seed: 11,
            ..WganConfig::default()
        };
        let (g0, _) = init_nets(&gen_spec, &critic_spec, cfg.seed).unwrap();
        let (g, _, _) = pretrain(&data, &prior, &gen_spec, &critic_spec, &cfg).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let z = prior_sample(&prior, 256, &mut rng).unwrap();
        let eval_points = sample_gaussian_grid(256, 1, 1, 0.5, 0.05, 101).unwrap();
        let before = emd(&g0.forward(&z).unwrap(), &eval_points.points).unwrap();
        let after = emd(&g.forward(&z).unwrap(), &eval_points.points).unwrap();
        assert!(
            after < before,
            "expected EMD drop over training: before {before}, after {after}"
        );
    }
}
