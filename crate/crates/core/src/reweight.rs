//! Adversarial training of the latent importance-weight network against a
//! Wasserstein critic, with the generator frozen.
//!
//! The importance net maximizes
//!
//! ```text
//! mean[w(z) (D(G(z)) - min_i D(G(z_i)))]            discriminator reward
//!   - lambda1 (mean w(z) - 1)^2                     self-normalization
//!   - lambda2 mean(max(0, w(z) - m)^2)              soft-clipping
//! ```
//!
//! while the critic keeps maximizing the weighted Wasserstein estimate
//! mean D(x) - mean w(z) D(G(z)) minus the gradient penalty. The offset is
//! the batch minimum, matching the training pseudocode rather than the
//! intractable minimum over the whole prior.

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
use crate::wgan::{sample_batch, CriticStats, DIVERGENCE_GUARD};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightConfig {
    /// Self-normalization weight (lambda_1).
    pub lambda1: f64,
    /// Soft-clip weight (lambda_2).
    pub lambda2: f64,
    /// Weight cap m.
    pub cap_m: f64,
    /// Critic updates per cycle (n_d).
    pub critic_steps: usize,
    /// Importance-net updates per cycle.
    pub w_steps: usize,
    pub batch_size: usize,
    pub lr_critic: f64,
    pub lr_importance: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub cycles: usize,
    /// Fresh critic steps to run when no pretrained critic is supplied.
    pub warm_start_steps: usize,
    pub gp_weight: f64,
    pub seed: u64,
}

impl Default for ReweightConfig {
    fn default() -> Self {
        ReweightConfig {
            lambda1: 10.0,
            lambda2: 3.0,
            cap_m: 3.0,
            critic_steps: 1,
            w_steps: 1,
            batch_size: 128,
            lr_critic: 1e-4,
            lr_importance: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            cycles: 2000,
            warm_start_steps: 500,
            gp_weight: 10.0,
            seed: 0,
        }
    }
}

impl ReweightConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::config("lambda weights must be >= 0"));
        }
        if self.cap_m <= 1.0 {
            return Err(Error::config("weight cap m must be > 1"));
        }
        if self.critic_steps == 0 {
            return Err(Error::config("critic_steps (n_d) must be >= 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch_size must be >= 2"));
        }
        Ok(())
    }
}

/// The reweighted latent law d(gamma_w) = w(z) d(gamma); a probability
/// measure exactly when E_gamma w = 1, which training drives toward.
#[derive(Debug, Clone)]
pub struct ReweightedPrior {
    pub prior: LatentPrior,
    pub importance: Mlp,
    pub cap_m: f64,
}

/// Per-cycle log entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReweightRecord {
    pub cycle: usize,
    /// Weighted Wasserstein estimate from the cycle's last critic step.
    pub weighted_emd: f64,
    pub gp: f64,
    pub mean_w: f64,
    pub ess: f64,
    pub clip_violation_rate: f64,
    /// Importance objective value from the cycle's last w step.
    pub objective: f64,
}

/// The scalar objective the importance net maximizes, recomputed from raw
/// weight and critic values. The offset is the batch minimum of `d_vals`.
pub fn importance_objective(
    w_vals: &[f64],
    d_vals: &[f64],
    lambda1: f64,
    lambda2: f64,
    cap_m: f64,
) -> Result<f64> {
    if w_vals.is_empty() || w_vals.len() != d_vals.len() {
        return Err(Error::config(
            "importance_objective needs equal, non-empty value batches",
        ));
    }
    debug_assert!(w_vals.iter().all(|&w| w >= 0.0));
    let n = w_vals.len() as f64;
    let delta = d_vals.iter().copied().fold(f64::INFINITY, f64::min);
    let reward = w_vals
        .iter()
        .zip(d_vals)
        .map(|(&w, &d)| w * (d - delta))
        .sum::<f64>()
        / n;
    let mean_w = w_vals.iter().sum::<f64>() / n;
    let norm_pen = (mean_w - 1.0) * (mean_w - 1.0);
    let clip_pen = w_vals
        .iter()
        .map(|&w| {
            let excess = (w - cap_m).max(0.0);
            excess * excess
        })
        .sum::<f64>()
        / n;
    Ok(reward - lambda1 * norm_pen - lambda2 * clip_pen)
}

/// Diversity diagnostic for non-negative weights: (sum w)^2 / (n sum w^2),
/// in (0, 1] with 1 for uniform weights and 1/n for a one-hot vector.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(Error::config("effective_sample_size needs n >= 1"));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::config("effective_sample_size needs non-negative weights"));
    }
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|&w| w * w).sum();
    if sum_sq == 0.0 {
        return Err(Error::Degenerate("all-zero weight vector".to_string()));
    }
    Ok(sum * sum / (weights.len() as f64 * sum_sq))
}

/// Prebuilt importance-net update. Inputs: `z` (b x d) and `dd` (b x 1,
/// the critic values minus their batch minimum, treated as constants).
pub(crate) struct ImportanceProgram {
    graph: Graph,
    batch: usize,
    objective: NodeId,
    mean_w: NodeId,
    grads: Vec<NodeId>,
    n_layers: usize,
}

impl ImportanceProgram {
    pub(crate) fn build(importance_spec: &MlpSpec, batch: usize, cfg: &ReweightConfig) -> Result<Self> {
        let mut g = Graph::new();
        let z = g.input("z", batch, importance_spec.input_dim())?;
        let dd = g.input("dd", batch, 1)?;
        let w_net = build_mlp(&mut g, importance_spec, z, ParamMode::Trainable { prefix: "w" })?;

        let reward_terms = g.mul(w_net.output, dd)?;
        let reward = g.mean_all(reward_terms)?;

        let mean_w = g.mean_all(w_net.output)?;
        let norm_dev = g.add_scalar(mean_w, -1.0)?;
        let norm_pen = g.square(norm_dev)?;

        let shifted = g.add_scalar(w_net.output, -cfg.cap_m)?;
        let excess = g.relu(shifted)?;
        let excess_sq = g.square(excess)?;
        let clip_pen = g.mean_all(excess_sq)?;

        let norm_term = g.scale(norm_pen, cfg.lambda1)?;
        let clip_term = g.scale(clip_pen, cfg.lambda2)?;
        let penalties = g.add(norm_term, clip_term)?;
        let objective = g.sub(reward, penalties)?;
        let loss = g.scale(objective, -1.0)?;

        let wrt: Vec<NodeId> = w_net.params.iter().flat_map(|&(w, b)| [w, b]).collect();
        let grads = g.grad(loss, &wrt)?;

        Ok(ImportanceProgram {
            graph: g,
            batch,
            objective,
            mean_w,
            grads,
            n_layers: w_net.params.len(),
        })
    }

    /// One Adam ascent step on the importance objective. Returns
    /// (objective, batch mean of w) before the update.
    pub(crate) fn step(
        &self,
        importance: &mut Mlp,
        state: &mut AdamState,
        z: &Tensor,
        dd: &Tensor,
    ) -> Result<(f64, f64)> {
        if z.rows() != self.batch || dd.shape() != (self.batch, 1) {
            return Err(Error::config("importance step batch mismatch"));
        }
        let mut b = Bindings::new();
        b.set("z", z.clone());
        b.set("dd", dd.clone());
        bind_params(&mut b, "w", &importance.params);
        let mut targets = vec![self.objective, self.mean_w];
        targets.extend(&self.grads);
        let mut values = eval(&self.graph, &targets, &b)?;
        let grad_tensors = values.split_off(2);
        let mut it = grad_tensors.into_iter();
        let layer_grads: Vec<_> = (0..self.n_layers)
            .map(|_| (it.next().unwrap(), it.next().unwrap()))
            .collect();
        adam_step(&mut importance.params, &layer_grads, state)?;
        Ok((values[0].get(0, 0), values[1].get(0, 0)))
    }
}

/// Critic values minus their batch minimum.
fn reward_offsets(d_vals: &Tensor) -> Tensor {
    let delta = d_vals.min_all();
    d_vals.map(|v| v - delta)
}

/// One critic ascent step on the weighted Wasserstein estimate, with both
/// the generator and the importance net frozen.
pub fn critic_step_weighted<R: Rng>(
    critic: &mut Mlp,
    state: &mut AdamState,
    generator: &Mlp,
    importance: &Mlp,
    real: &Tensor,
    z: &Tensor,
    cfg: &ReweightConfig,
    rng: &mut R,
) -> Result<CriticStats> {
    cfg.validate()?;
    let fake = generator.forward(z)?;
    let weights = importance.forward(z)?;
    let program = crate::wgan::CriticProgram::build(&critic.spec, real.rows(), cfg.gp_weight)?;
    program.step(critic, state, real, &fake, Some(&weights), rng)
}

/// One Adam step of the importance net maximizing its objective, with the
/// generator and critic frozen.
pub fn importance_step(
    importance: &mut Mlp,
    state: &mut AdamState,
    critic: &Mlp,
    generator: &Mlp,
    z: &Tensor,
    cfg: &ReweightConfig,
) -> Result<f64> {
    cfg.validate()?;
    let d_vals = critic.forward(&generator.forward(z)?)?;
    let dd = reward_offsets(&d_vals);
    let program = ImportanceProgram::build(&importance.spec, z.rows(), cfg)?;
    let (objective, _) = program.step(importance, state, z, &dd)?;
    Ok(objective)
}

/// Deterministic initial importance net for a reweighting run.
pub fn init_importance(spec: &MlpSpec, seed: u64) -> Result<Mlp> {
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let w_seed = seeder.random::<u64>();
    Mlp::init(spec.clone(), w_seed)
}

/// Full adversarial training loop of the importance net (the generator
/// stays frozen throughout). Reuses the supplied pretrained critic, or
/// warm-starts a fresh one with `warm_start_steps` unweighted critic
/// updates when none is given.
pub fn train_importance(
    generator: &Mlp,
    critic_init: Option<Mlp>,
    critic_spec: &MlpSpec,
    importance_spec: &MlpSpec,
    dataset: &Dataset2D,
    prior: &LatentPrior,
    cfg: &ReweightConfig,
) -> Result<(Mlp, Mlp, Vec<ReweightRecord>)> {
    cfg.validate()?;
    prior.validate()?;
    if importance_spec.input_dim() != prior.dim {
        return Err(Error::config("importance net input dim must match prior dim"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut importance = init_importance(importance_spec, cfg.seed)?;
    let mut w_state = AdamState::new(&importance.params, cfg.lr_importance, cfg.beta1, cfg.beta2)?;

    let critic_program =
        crate::wgan::CriticProgram::build(critic_spec, cfg.batch_size, cfg.gp_weight)?;
    let (mut critic, warm_steps) = match critic_init {
        Some(c) => {
            if c.spec != *critic_spec {
                return Err(Error::config("supplied critic does not match critic spec"));
            }
            (c, 0)
        }
        None => {
            let mut seeder = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(3));
            let d_seed = seeder.random::<u64>();
            (Mlp::init(critic_spec.clone(), d_seed)?, cfg.warm_start_steps)
        }
    };
    let mut d_state = AdamState::new(&critic.params, cfg.lr_critic, cfg.beta1, cfg.beta2)?;

    // Unweighted warm-up so a fresh critic sees the frozen generator first.
    for step in 0..warm_steps {
        let real = sample_batch(dataset, cfg.batch_size, &mut rng);
        let z = prior_sample(prior, cfg.batch_size, &mut rng)?;
        let fake = generator.forward(&z)?;
        let stats = critic_program.step(&mut critic, &mut d_state, &real, &fake, None, &mut rng)?;
        if stats.objective.abs() > DIVERGENCE_GUARD {
            return Err(Error::Divergence { step, value: stats.objective });
        }
    }

    let importance_program = ImportanceProgram::build(importance_spec, cfg.batch_size, cfg)?;
    let mut log = Vec::with_capacity(cfg.cycles);
    for cycle in 0..cfg.cycles {
        let mut critic_stats = CriticStats { objective: 0.0, gp: 0.0 };
        for _ in 0..cfg.critic_steps {
            let real = sample_batch(dataset, cfg.batch_size, &mut rng);
            let z = prior_sample(prior, cfg.batch_size, &mut rng)?;
            let fake = generator.forward(&z)?;
            let weights = importance.forward(&z)?;
            critic_stats =
                critic_program.step(&mut critic, &mut d_state, &real, &fake, Some(&weights), &mut rng)?;
            if critic_stats.objective.abs() > DIVERGENCE_GUARD {
                return Err(Error::Divergence { step: cycle, value: critic_stats.objective });
            }
        }

        let mut objective = 0.0;
        let mut diag_weights: Vec<f64> = Vec::new();
        for _ in 0..cfg.w_steps {
            let z = prior_sample(prior, cfg.batch_size, &mut rng)?;
            let d_vals = critic.forward(&generator.forward(&z)?)?;
            let dd = reward_offsets(&d_vals);
            let (obj, _) = importance_program.step(&mut importance, &mut w_state, &z, &dd)?;
            objective = obj;
            diag_weights = importance.forward(&z)?.into_values();
        }

        let (mean_w, ess, clip_rate) = if diag_weights.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let mean_w = diag_weights.iter().sum::<f64>() / diag_weights.len() as f64;
            let ess = effective_sample_size(&diag_weights).unwrap_or(0.0);
            let clip_rate = diag_weights.iter().filter(|&&w| w > cfg.cap_m).count() as f64
                / diag_weights.len() as f64;
            (mean_w, ess, clip_rate)
        };
        log.push(ReweightRecord {
            cycle,
            weighted_emd: critic_stats.objective,
            gp: critic_stats.gp,
            mean_w,
            ess,
            clip_violation_rate: clip_rate,
            objective,
        });
    }
    Ok((importance, critic, log))
}

/// Monte-Carlo estimate of E_gamma w over `n` fresh prior draws.
pub fn monte_carlo_mean_weight<R: Rng>(
    importance: &Mlp,
    prior: &LatentPrior,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut total = 0.0;
    let mut remaining = n;
    // Chunked to keep the forward batches small.
    while remaining > 0 {
        let b = remaining.min(4096);
        let z = prior_sample(prior, b, rng)?;
        total += importance.forward(&z)?.sum_all();
        remaining -= b;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{default_critic_spec, default_generator_spec, default_importance_spec};
    use crate::synthdata::sample_gaussian_grid;
    use crate::testutil::linear_mlp;

    #[test]
    fn objective_constant_d_uniform_w_is_zero() {
        let w = vec![1.0; 8];
        let d = vec![0.37; 8];
        let obj = importance_objective(&w, &d, 10.0, 3.0, 3.0).unwrap();
        assert_eq!(obj, 0.0);
    }

    #[test]
    fn objective_pure_clip_penalty() {
        // w = m + 1 everywhere, d constant, lambda1 = 0: only the clip term
        // (excess 1 squared) survives.
        let m = 3.0;
        let w = vec![m + 1.0; 5];
        let d = vec![-2.0; 5];
        let obj = importance_objective(&w, &d, 0.0, 3.0, m).unwrap();
        assert_eq!(obj, -3.0);
    }

    #[test]
    fn objective_hand_case() {
        // b = 3, w = (0.5, 1, 1.5), d = (-1, 0, 2): offset -1,
        // reward mean(0, 1, 4.5) = 11/6, both penalties zero.
        let w = [0.5, 1.0, 1.5];
        let d = [-1.0, 0.0, 2.0];
        let obj = importance_objective(&w, &d, 10.0, 3.0, 3.0).unwrap();
        // Independent recomputation with a different accumulation order.
        let delta = -1.0;
        let reward_alt =
            (w[2] * (d[2] - delta) + w[0] * (d[0] - delta) + w[1] * (d[1] - delta)) / 3.0;
        assert!((obj - 11.0 / 6.0).abs() < 1e-15);
        assert!((obj - reward_alt).abs() < 1e-15);
    }

    #[test]
    fn objective_empty_batch_rejected() {
        assert!(importance_objective(&[], &[], 10.0, 3.0, 3.0).is_err());
    }

    #[test]
    fn ess_uniform_weights_is_one() {
        assert_eq!(effective_sample_size(&[2.0; 10]).unwrap(), 1.0);
    }

    #[test]
    fn ess_one_hot_is_reciprocal_n() {
        let mut w = vec![0.0; 8];
        w[3] = 5.0;
        assert_eq!(effective_sample_size(&w).unwrap(), 1.0 / 8.0);
    }

    #[test]
    fn ess_hand_case() {
        let ess = effective_sample_size(&[1.0, 1.0, 2.0]).unwrap();
        assert!((ess - 16.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn ess_all_zero_rejected() {
        assert!(matches!(
            effective_sample_size(&[0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn importance_step_zero_lr_is_noop() {
        let spec = default_importance_spec(2, &[8, 8, 8, 8]).unwrap();
        let mut net = Mlp::init(spec, 4).unwrap();
        let before = net.params.clone();
        let mut state = AdamState::new(&net.params, 0.0, 0.5, 0.9).unwrap();
        let generator = linear_mlp(&Tensor::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let critic = linear_mlp(&Tensor::new(2, 1, vec![0.3, -0.4]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = prior_sample(&LatentPrior::gaussian(2), 16, &mut rng).unwrap();
        let cfg = ReweightConfig { batch_size: 16, ..ReweightConfig::default() };
        importance_step(&mut net, &mut state, &critic, &generator, &z, &cfg).unwrap();
        assert_eq!(net.params, before);
    }

    #[test]
    fn importance_step_is_deterministic() {
        let spec = default_importance_spec(2, &[8, 8, 8, 8]).unwrap();
        let generator = linear_mlp(&Tensor::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let critic = linear_mlp(&Tensor::new(2, 1, vec![0.3, -0.4]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = prior_sample(&LatentPrior::gaussian(2), 16, &mut rng).unwrap();
        let cfg = ReweightConfig { batch_size: 16, ..ReweightConfig::default() };
        let run = || {
            let mut net = Mlp::init(spec.clone(), 4).unwrap();
            let mut state = AdamState::new(&net.params, 1e-3, 0.5, 0.9).unwrap();
            importance_step(&mut net, &mut state, &critic, &generator, &z, &cfg).unwrap();
            net.params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn penalty_gradients_match_finite_differences() {
        // With d constant the reward offset is zero, so the objective is
        // purely the two lambda terms; check its parameter gradient against
        // central differences of the recomputed objective.
        let spec = default_importance_spec(2, &[6, 6, 6, 6]).unwrap();
        let net = Mlp::init(spec.clone(), 8).unwrap();
        let cfg = ReweightConfig {
            batch_size: 8,
            lambda1: 10.0,
            lambda2: 3.0,
            cap_m: 1.2,
            ..ReweightConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let z = prior_sample(&LatentPrior::gaussian(2), 8, &mut rng).unwrap();
        let dd = Tensor::zeros(8, 1);

        // Autodiff gradient of the loss (-objective).
        let program = ImportanceProgram::build(&spec, 8, &cfg).unwrap();
        let mut b = Bindings::new();
        b.set("z", z.clone());
        b.set("dd", dd.clone());
        bind_params(&mut b, "w", &net.params);
        let grads = eval(&program.graph, &program.grads, &b).unwrap();

        let objective_of = |params: &crate::nn::MlpParams| {
            let net = Mlp::new(spec.clone(), params.clone()).unwrap();
            let w = net.forward(&z).unwrap();
            importance_objective(
                w.values(),
                &vec![0.0; 8],
                cfg.lambda1,
                cfg.lambda2,
                cfg.cap_m,
            )
            .unwrap()
        };

        let h = 1e-6;
        for layer in 0..net.params.layers.len() {
            let w_grad = &grads[2 * layer];
            for idx in [0usize, w_grad.len() / 2, w_grad.len() - 1] {
                let mut plus = net.params.clone();
                plus.layers[layer].0.values_mut()[idx] += h;
                let mut minus = net.params.clone();
                minus.layers[layer].0.values_mut()[idx] -= h;
                // Loss gradient = -objective gradient.
                let fd = -(objective_of(&plus) - objective_of(&minus)) / (2.0 * h);
                let ad = w_grad.values()[idx];
                let scale = fd.abs().max(ad.abs()).max(1e-8);
                assert!(
                    (fd - ad).abs() / scale < 1e-4,
                    "layer {layer} idx {idx}: fd {fd} vs ad {ad}"
                );
            }
        }
    }

    #[test]
    fn weighted_critic_step_with_unit_weights_matches_plain() {
        let critic_spec = default_critic_spec(&[8, 8]).unwrap();
        let generator = linear_mlp(&Tensor::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        // Constant-one importance net: zero weights, output bias 1, relu.
        let w_spec = default_importance_spec(2, &[4, 4, 4, 4]).unwrap();
        let mut w_params = crate::nn::mlp_init(&w_spec, 0).unwrap();
        for (w, b) in &mut w_params.layers {
            *w = Tensor::zeros(w.rows(), w.cols());
            *b = Tensor::zeros(1, b.cols());
        }
        let last = w_params.layers.len() - 1;
        w_params.layers[last].1 = Tensor::new(1, 1, vec![1.0]).unwrap();
        let ones_net = Mlp::new(w_spec, w_params).unwrap();

        let real = {
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            let values = (0..32).map(|_| rng.random_range(-1.0..1.0)).collect();
            Tensor::new(16, 2, values).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let z = prior_sample(&LatentPrior::gaussian(2), 16, &mut rng).unwrap();
        let cfg = ReweightConfig { batch_size: 16, ..ReweightConfig::default() };
        let wgan_cfg = crate::wgan::WganConfig {
            batch_size: 16,
            gp_weight: cfg.gp_weight,
            ..crate::wgan::WganConfig::default()
        };

        let mut c1 = Mlp::init(critic_spec.clone(), 77).unwrap();
        let mut s1 = AdamState::new(&c1.params, 1e-3, 0.5, 0.9).unwrap();
        let mut rng1 = ChaCha8Rng::seed_from_u64(40);
        critic_step_weighted(&mut c1, &mut s1, &generator, &ones_net, &real, &z, &cfg, &mut rng1)
            .unwrap();

        let mut c2 = Mlp::init(critic_spec, 77).unwrap();
        let mut s2 = AdamState::new(&c2.params, 1e-3, 0.5, 0.9).unwrap();
        let mut rng2 = ChaCha8Rng::seed_from_u64(40);
        crate::wgan::critic_step(&mut c2, &mut s2, &generator, &real, &z, &wgan_cfg, &mut rng2)
            .unwrap();

        assert_eq!(c1.params, c2.params);
    }

    #[test]
    fn train_importance_zero_cycles_keeps_initial_net() {
        let data = sample_gaussian_grid(64, 1, 1, 0.5, 0.05, 7).unwrap();
        let prior = LatentPrior::gaussian(2);
        let gen_spec = default_generator_spec(2, &[8]).unwrap();
        let critic_spec = default_critic_spec(&[8]).unwrap();
        let w_spec = default_importance_spec(2, &[8, 8, 8, 8]).unwrap();
        let generator = Mlp::init(gen_spec, 1).unwrap();
        let cfg = ReweightConfig {
            cycles: 0,
            warm_start_steps: 3,
            batch_size: 8,
            seed: 5,
            ..ReweightConfig::default()
        };
        let (w, _, log) =
            train_importance(&generator, None, &critic_spec, &w_spec, &data, &prior, &cfg)
                .unwrap();
        let w0 = init_importance(&w_spec, 5).unwrap();
        assert_eq!(w.params, w0.params);
        assert!(log.is_empty());
    }
}
