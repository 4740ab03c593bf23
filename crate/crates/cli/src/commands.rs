//! Pipeline commands over immutable bundle files. A command never rewrites
//! its inputs; updated bundles are written into the output directory.

use std::path::{Path, PathBuf};

use latentrw::heatmap::{importance_grid_slice, local_maxima_count};
use latentrw::reweight::train_importance;
use latentrw::wgan::pretrain;

use crate::bundle::{BundleConfigs, ModelBundle, NetBlob, FORMAT_VERSION};
use crate::config::{load_config, RunConfig};
use crate::csvio::{fmt_f64, write_csv, FileMeta};
use crate::error::{CliError, CliResult};

pub mod eval;
pub mod sample;

fn ensure_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", out.display())))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::validation(format!("serialization failed: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Trains the WGAN-GP pair on the dataset's pretraining target and writes
/// the resulting bundle plus the per-step training log.
pub fn cmd_pretrain(config_path: &Path, out: &Path) -> CliResult<PathBuf> {
    let (config, hash) = load_config(config_path)?;
    ensure_out_dir(out)?;

    let prior = config.arch.prior();
    let gen_spec = config.arch.generator_spec()?;
    let critic_spec = config.arch.critic_spec()?;
    let mut wgan_cfg = config.wgan.clone();
    wgan_cfg.seed = config.wgan_seed();

    let data = config
        .dataset
        .sample_pretrain_target(config.dataset.n(), config.seed)?;
    let (generator, critic, log) = pretrain(&data, &prior, &gen_spec, &critic_spec, &wgan_cfg)?;

    let bundle = ModelBundle {
        format_version: FORMAT_VERSION,
        master_seed: config.seed,
        config_hash: hash.clone(),
        provenance: vec!["pretrain".to_string()],
        prior,
        dataset: config.dataset.clone(),
        generator: NetBlob::from_mlp(&generator),
        critic: NetBlob::from_mlp(&critic),
        importance: None,
        ratio_model: None,
        configs: BundleConfigs {
            wgan: Some(wgan_cfg),
            reweight: None,
            finetune: Some(config.finetune.clone()),
            ga: Some(config.ga),
            samplers: Some(config.samplers.clone()),
        },
    };
    let bundle_path = out.join("bundle.json");
    bundle.save(&bundle_path)?;

    #[derive(serde::Serialize)]
    struct PretrainLog<'a> {
        format_version: u32,
        master_seed: u64,
        config_hash: &'a str,
        records: &'a [latentrw::wgan::WganRecord],
    }
    write_json(
        &out.join("pretrain_log.json"),
        &PretrainLog {
            format_version: FORMAT_VERSION,
            master_seed: config.seed,
            config_hash: &hash,
            records: &log,
        },
    )?;
    eprintln!(
        "pretrained {} for {} generator steps -> {}",
        config.dataset.name(),
        config.wgan.generator_steps,
        bundle_path.display()
    );
    Ok(bundle_path)
}

/// Trains the importance net against the bundle's frozen generator on the
/// real target distribution; writes an extended bundle and the cycle log.
pub fn cmd_reweight(config_path: &Path, bundle_path: &Path, out: &Path) -> CliResult<PathBuf> {
    let (config, hash) = load_config(config_path)?;
    let bundle = ModelBundle::load(bundle_path)?;
    ensure_out_dir(out)?;

    let generator = bundle.generator()?;
    let critic = bundle.critic()?;
    let prior = bundle.prior;
    if prior.dim != config.arch.latent_dim {
        return Err(CliError::validation(format!(
            "bundle latent dim {} does not match config arch latent dim {}",
            prior.dim, config.arch.latent_dim
        )));
    }
    let importance_spec = config.arch.importance_spec()?;
    let mut reweight_cfg = config.reweight.clone();
    reweight_cfg.seed = config.reweight_seed();

    let data = config.dataset.sample(config.seed.wrapping_add(1))?;
    let (importance, critic, log) = train_importance(
        &generator,
        Some(critic.clone()),
        &critic.spec,
        &importance_spec,
        &data,
        &prior,
        &reweight_cfg,
    )?;

    let mut new_bundle = bundle;
    new_bundle.master_seed = config.seed;
    new_bundle.config_hash = hash.clone();
    new_bundle.provenance.push("reweight".to_string());
    new_bundle.importance = Some(NetBlob::from_mlp(&importance));
    new_bundle.critic = NetBlob::from_mlp(&critic);
    new_bundle.configs.reweight = Some(reweight_cfg);
    let out_bundle = out.join("bundle.json");
    new_bundle.save(&out_bundle)?;

    #[derive(serde::Serialize)]
    struct ReweightLog<'a> {
        format_version: u32,
        master_seed: u64,
        config_hash: &'a str,
        records: &'a [latentrw::reweight::ReweightRecord],
    }
    write_json(
        &out.join("reweight_log.json"),
        &ReweightLog {
            format_version: FORMAT_VERSION,
            master_seed: config.seed,
            config_hash: &hash,
            records: &log,
        },
    )?;
    if let Some(last) = log.last() {
        eprintln!(
            "reweighted over {} cycles: mean_w {:.3}, ess {:.3}, clip rate {:.3} -> {}",
            log.len(),
            last.mean_w,
            last.ess,
            last.clip_violation_rate,
            out_bundle.display()
        );
    }
    Ok(out_bundle)
}

/// Renders the importance-weight heatmap as CSV and SVG.
pub fn cmd_heatmap(
    bundle_path: &Path,
    resolution: usize,
    slice: Option<(usize, usize)>,
    out: &Path,
) -> CliResult<()> {
    let bundle = ModelBundle::load(bundle_path)?;
    ensure_out_dir(out)?;
    let importance = bundle
        .importance()?
        .ok_or_else(|| CliError::validation("bundle has no importance net; run reweight first"))?;
    let dims = match (bundle.prior.dim, slice) {
        (2, None) => (0, 1),
        (_, Some(dims)) => dims,
        (d, None) => {
            return Err(CliError::validation(format!(
                "latent dimension is {d}; pass --slice i,j to pick a 2-D slice"
            )))
        }
    };
    let grid = importance_grid_slice(&importance, &bundle.prior, resolution, dims)?;

    let meta = FileMeta::new(bundle.master_seed, &bundle.config_hash)
        .with("resolution", resolution)
        .with("slice", format!("{},{}", dims.0, dims.1));
    let mut rows = Vec::with_capacity(resolution * resolution);
    for (row, &z2) in grid.coords.iter().enumerate() {
        for (col, &z1) in grid.coords.iter().enumerate() {
            rows.push(format!(
                "{},{},{}",
                fmt_f64(z1),
                fmt_f64(z2),
                fmt_f64(grid.value(row, col))
            ));
        }
    }
    write_csv(&out.join("heatmap.csv"), &meta, "z1,z2,w", rows.into_iter())?;

    let svg = crate::svg::render_heatmap(&grid, "importance weights over latent space");
    std::fs::write(out.join("heatmap.svg"), svg)?;

    let peak = grid.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let maxima = local_maxima_count(&grid, 0.05 * peak.max(0.0));
    eprintln!(
        "heatmap {}x{} written; {} local maxima above 5% of peak",
        resolution, resolution, maxima
    );
    Ok(())
}

/// Exports the configured dataset as x,y CSV.
pub fn cmd_dataset(config_path: &Path, out: &Path) -> CliResult<()> {
    let (config, hash) = load_config(config_path)?;
    ensure_out_dir(out)?;
    let data = config.dataset.sample(config.seed)?;
    let meta = FileMeta::new(config.seed, &hash).with("dataset", config.dataset.name());
    let rows = (0..data.n()).map(|i| {
        format!(
            "{},{}",
            fmt_f64(data.points.get(i, 0)),
            fmt_f64(data.points.get(i, 1))
        )
    });
    write_csv(&out.join("dataset.csv"), &meta, "x,y", rows)?;
    eprintln!("wrote {} points of {}", data.n(), config.dataset.name());
    Ok(())
}

/// Applies overrides from an optional config to stage settings stored in a
/// bundle (the config wins where given).
pub fn effective_run_settings(
    bundle: &ModelBundle,
    config: Option<&RunConfig>,
) -> (
    latentrw::samplers::GaConfig,
    crate::config::SamplerConfig,
    latentrw::samplers::FinetuneConfig,
) {
    let ga = config
        .map(|c| c.ga)
        .or(bundle.configs.ga)
        .unwrap_or_default();
    let samplers = config
        .map(|c| c.samplers.clone())
        .or_else(|| bundle.configs.samplers.clone())
        .unwrap_or_default();
    let finetune = config
        .map(|c| c.finetune.clone())
        .or_else(|| bundle.configs.finetune.clone())
        .unwrap_or_default();
    (ga, samplers, finetune)
}
