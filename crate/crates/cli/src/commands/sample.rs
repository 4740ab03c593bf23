//! Sample generation with per-sample wall-time accounting.

use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use latentrw::nn::{prior_sample, Mlp};
use latentrw::reweight::effective_sample_size;
use latentrw::samplers::{
    drs, estimate_ratio_max, finetune_bce, latent_ga, latent_rs, mh, sir, RatioModel,
    ScalarField,
};
use latentrw::tensor::Tensor;

use crate::bundle::{ModelBundle, NetBlob};
use crate::config::RunConfig;
use crate::csvio::{fmt_f64, write_csv, FileMeta};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Raw generator samples.
    None,
    #[value(name = "latentrs")]
    LatentRs,
    #[value(name = "latentga")]
    LatentGa,
    #[value(name = "latentrs-ga")]
    LatentRsGa,
    Drs,
    Sir,
    Mh,
    Dot,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::LatentRs => "latentrs",
            Method::LatentGa => "latentga",
            Method::LatentRsGa => "latentrs-ga",
            Method::Drs => "drs",
            Method::Sir => "sir",
            Method::Mh => "mh",
            Method::Dot => "dot",
        }
    }

    fn needs_importance(&self) -> bool {
        matches!(self, Method::LatentRs | Method::LatentGa | Method::LatentRsGa)
    }

    fn needs_ratio_model(&self) -> bool {
        matches!(self, Method::Drs | Method::Sir | Method::Mh)
    }
}

struct SampleRun {
    points: Vec<[f64; 2]>,
    wall_time_us: Vec<f64>,
    /// (accepted, total draws) for rejection methods.
    acceptance: Option<(usize, usize)>,
    /// Importance weights observed on candidate draws (latentRS only).
    candidate_weights: Vec<f64>,
}

pub fn cmd_sample(
    bundle_path: &Path,
    method: Method,
    n: usize,
    seed: u64,
    config: Option<&RunConfig>,
    out: &Path,
) -> CliResult<()> {
    let mut bundle = ModelBundle::load(bundle_path)?;
    super::ensure_out_dir(out)?;
    let (ga_cfg, sampler_cfg, finetune_cfg) = super::effective_run_settings(&bundle, config);

    let generator = bundle.generator()?;
    let prior = bundle.prior;

    // Lazily fine-tune and cache the ratio model when a density-ratio
    // baseline needs it; the updated bundle goes to the output directory
    // (inputs are never rewritten).
    let mut ratio_model: Option<RatioModel> = bundle.ratio_model()?;
    if method.needs_ratio_model() && ratio_model.is_none() {
        eprintln!(
            "fine-tuning classifier for {} ({} steps)...",
            method.name(),
            finetune_cfg.steps
        );
        let critic = bundle.critic()?;
        let data = bundle.dataset.sample(bundle.master_seed.wrapping_add(1))?;
        let mut cfg = finetune_cfg.clone();
        cfg.seed = bundle.master_seed.wrapping_add(0x1234_5678);
        let model = finetune_bce(&critic, &generator, &data, &prior, &cfg)?;
        bundle.ratio_model = Some(NetBlob::from_mlp(&model.logit));
        bundle.configs.finetune = Some(cfg);
        bundle.provenance.push("finetune-bce".to_string());
        bundle.save(&out.join("bundle.json"))?;
        eprintln!("cached ratio model in {}", out.join("bundle.json").display());
        ratio_model = Some(model);
    }

    let importance = bundle.importance()?;
    if method.needs_importance() && importance.is_none() {
        return Err(CliError::validation(format!(
            "method {} needs an importance net; run reweight first",
            method.name()
        )));
    }
    let cap_m = bundle
        .configs
        .reweight
        .as_ref()
        .map(|c| c.cap_m)
        .unwrap_or_else(|| latentrw::reweight::ReweightConfig::default().cap_m);

    let critic = if method == Method::Dot {
        Some(bundle.critic()?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = run_sampler(
        method,
        n,
        &generator,
        critic.as_ref(),
        importance.as_ref(),
        ratio_model.as_ref(),
        &prior,
        cap_m,
        &ga_cfg,
        &sampler_cfg,
        &mut rng,
    )?;

    let mut meta = FileMeta::new(bundle.master_seed, &bundle.config_hash)
        .with("method", method.name())
        .with("sample_seed", seed);
    if let Some((accepted, draws)) = run.acceptance {
        let rate = accepted as f64 / draws.max(1) as f64;
        meta = meta.with("acceptance_rate", format!("{rate:.6}"));
        eprintln!("acceptance rate {:.4} ({} draws for {} samples)", rate, draws, accepted);
    }
    if !run.candidate_weights.is_empty() {
        if let Ok(ess) = effective_sample_size(&run.candidate_weights) {
            meta = meta.with("ess", format!("{ess:.6}"));
        }
        let mean_w =
            run.candidate_weights.iter().sum::<f64>() / run.candidate_weights.len() as f64;
        meta = meta.with("mean_w", format!("{mean_w:.6}"));
    }

    let rows = run.points.iter().zip(&run.wall_time_us).map(|(p, t)| {
        format!(
            "{},{},{},{},{}",
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            method.name(),
            seed,
            fmt_f64(*t)
        )
    });
    let path = out.join("samples.csv");
    write_csv(&path, &meta, "x,y,method,seed,wall_time_us", rows)?;
    eprintln!("wrote {} samples to {}", run.points.len(), path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sampler(
    method: Method,
    n: usize,
    generator: &Mlp,
    critic: Option<&Mlp>,
    importance: Option<&Mlp>,
    ratio_model: Option<&RatioModel>,
    prior: &latentrw::nn::LatentPrior,
    cap_m: f64,
    ga_cfg: &latentrw::samplers::GaConfig,
    sampler_cfg: &crate::config::SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> CliResult<SampleRun> {
    let mut run = SampleRun {
        points: Vec::with_capacity(n),
        wall_time_us: Vec::with_capacity(n),
        acceptance: None,
        candidate_weights: Vec::new(),
    };

    let importance_field = importance.map(ScalarField::for_net).transpose()?;
    let dot_field = match (method, critic) {
        (Method::Dot, Some(critic)) => Some(ScalarField::for_composition(generator, critic)?),
        (Method::Dot, None) => {
            return Err(CliError::validation("dot needs the bundle's critic"))
        }
        _ => None,
    };
    // DRS calibration: k is the largest ratio seen over a fresh batch of
    // generated points, fixed before sampling starts.
    let drs_k = if method == Method::Drs {
        let model = ratio_model.expect("checked by caller");
        Some(
            estimate_ratio_max(model, generator, prior, sampler_cfg.drs_calibration_draws, rng)?
                .max(1e-12),
        )
    } else {
        None
    };

    let generate_one = |z: &[f64], generator: &Mlp| -> CliResult<[f64; 2]> {
        let out = generator.forward(&Tensor::new(1, z.len(), z.to_vec())?)?;
        Ok([out.get(0, 0), out.get(0, 1)])
    };

    let mut total_draws = 0usize;
    for _ in 0..n {
        let t0 = Instant::now();
        let point = match method {
            Method::None => {
                let z = prior_sample(prior, 1, rng)?.into_values();
                generate_one(&z, generator)?
            }
            Method::LatentRs => {
                let field = importance_field.as_ref().expect("checked above");
                let outcome = track_weights(
                    field,
                    prior,
                    cap_m,
                    rng,
                    sampler_cfg.max_draws,
                    &mut run.candidate_weights,
                )?;
                total_draws += outcome.draws;
                generate_one(&outcome.z, generator)?
            }
            Method::LatentGa => {
                let field = importance_field.as_ref().expect("checked above");
                let z0 = prior_sample(prior, 1, rng)?.into_values();
                let z = latent_ga(|z| field.gradient(z), prior, &z0, ga_cfg)?;
                generate_one(&z, generator)?
            }
            Method::LatentRsGa => {
                let field = importance_field.as_ref().expect("checked above");
                let outcome = track_weights(
                    field,
                    prior,
                    cap_m,
                    rng,
                    sampler_cfg.max_draws,
                    &mut run.candidate_weights,
                )?;
                total_draws += outcome.draws;
                let z = latent_ga(|z| field.gradient(z), prior, &outcome.z, ga_cfg)?;
                generate_one(&z, generator)?
            }
            Method::Drs => {
                let model = ratio_model.expect("checked above");
                let k = drs_k.expect("calibrated above");
                let (x, draws) = drs(
                    |x| model.ratio(x).unwrap_or(0.0),
                    |rng: &mut ChaCha8Rng| {
                        let z = prior_sample(prior, 1, rng)?.into_values();
                        Ok(generate_one(&z, generator).map_err(to_core_error)?.to_vec())
                    },
                    k,
                    rng,
                    sampler_cfg.max_draws,
                )?;
                total_draws += draws;
                [x[0], x[1]]
            }
            Method::Sir => {
                let model = ratio_model.expect("checked above");
                let x = sir(
                    |x| model.ratio(x).unwrap_or(0.0),
                    |rng: &mut ChaCha8Rng| {
                        let z = prior_sample(prior, 1, rng)?.into_values();
                        Ok(generate_one(&z, generator).map_err(to_core_error)?.to_vec())
                    },
                    sampler_cfg.sir_candidates,
                    rng,
                )?;
                [x[0], x[1]]
            }
            Method::Mh => {
                let model = ratio_model.expect("checked above");
                let x = mh(
                    |x| model.ratio(x).unwrap_or(0.0),
                    |rng: &mut ChaCha8Rng| {
                        let z = prior_sample(prior, 1, rng)?.into_values();
                        Ok(generate_one(&z, generator).map_err(to_core_error)?.to_vec())
                    },
                    sampler_cfg.mh_chain_len,
                    rng,
                )?;
                [x[0], x[1]]
            }
            Method::Dot => {
                let field = dot_field.as_ref().expect("built above");
                let z0 = prior_sample(prior, 1, rng)?.into_values();
                let z = latent_ga(|z| field.gradient(z), prior, &z0, ga_cfg)?;
                generate_one(&z, generator)?
            }
        };
        run.wall_time_us.push(t0.elapsed().as_secs_f64() * 1e6);
        run.points.push(point);
    }
    if matches!(method, Method::LatentRs | Method::LatentRsGa | Method::Drs) {
        run.acceptance = Some((n, total_draws));
    }
    Ok(run)
}

/// latent_rs while recording the weight of every candidate draw.
fn track_weights(
    field: &ScalarField,
    prior: &latentrw::nn::LatentPrior,
    cap_m: f64,
    rng: &mut ChaCha8Rng,
    max_draws: usize,
    weights: &mut Vec<f64>,
) -> CliResult<latentrw::samplers::RsOutcome> {
    let recorded = std::cell::RefCell::new(weights);
    Ok(latent_rs(
        |z| {
            let w = field.value(z).unwrap_or(f64::NAN);
            recorded.borrow_mut().push(w);
            w
        },
        prior,
        cap_m,
        rng,
        max_draws,
    )?)
}

fn to_core_error(e: CliError) -> latentrw::Error {
    latentrw::Error::Config(e.message)
}
