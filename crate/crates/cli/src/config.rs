//! Run configuration: one JSON document describing the dataset, the
//! architectures, every stage's hyperparameters and the evaluation
//! protocol.

use std::path::Path;

use serde::{Deserialize, Serialize};

use latentrw::nn::{LatentPrior, MlpSpec, PriorKind};
use latentrw::reweight::ReweightConfig;
use latentrw::samplers::{FinetuneConfig, GaConfig};
use latentrw::synthdata::DatasetSpec;
use latentrw::wgan::WganConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; stage seeds derive from it.
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub arch: ArchConfig,
    #[serde(default)]
    pub wgan: WganConfig,
    #[serde(default)]
    pub reweight: ReweightConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub finetune: FinetuneConfig,
    #[serde(default)]
    pub samplers: SamplerConfig,
    #[serde(default)]
    pub eval: EvalProtocol,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub latent_dim: usize,
    pub prior: PriorKind,
    pub generator_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub importance_hidden: Vec<usize>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            latent_dim: 2,
            prior: PriorKind::Gaussian,
            generator_hidden: vec![128, 128, 128],
            critic_hidden: vec![128, 128, 128],
            importance_hidden: vec![64, 64, 64, 64],
        }
    }
}

impl ArchConfig {
    pub fn prior(&self) -> LatentPrior {
        LatentPrior { kind: self.prior, dim: self.latent_dim }
    }

    pub fn generator_spec(&self) -> CliResult<MlpSpec> {
        Ok(latentrw::nn::default_generator_spec(self.latent_dim, &self.generator_hidden)?)
    }

    pub fn critic_spec(&self) -> CliResult<MlpSpec> {
        Ok(latentrw::nn::default_critic_spec(&self.critic_hidden)?)
    }

    pub fn importance_spec(&self) -> CliResult<MlpSpec> {
        Ok(latentrw::nn::default_importance_spec(self.latent_dim, &self.importance_hidden)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub sir_candidates: usize,
    pub mh_chain_len: usize,
    pub drs_calibration_draws: usize,
    /// Draw budget for the rejection samplers.
    pub max_draws: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            sir_candidates: 10,
            mh_chain_len: 100,
            drs_calibration_draws: 10_000,
            max_draws: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalProtocol {
    /// Points per sample set.
    pub points: usize,
    /// Independent evaluation repeats with fresh sets.
    pub repeats: usize,
    /// Neighbor rank for precision/recall.
    pub k: usize,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol { points: 1024, repeats: 10, k: 3 }
    }
}

impl RunConfig {
    /// Stage seeds derived from the master seed.
    pub fn wgan_seed(&self) -> u64 {
        self.seed
    }

    pub fn reweight_seed(&self) -> u64 {
        self.seed.wrapping_add(0x9E37_79B9)
    }
}

/// Parses a run config, reporting JSON syntax errors with line context.
pub fn load_config(path: &Path) -> CliResult<(RunConfig, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_slice(&bytes).map_err(|e| {
        CliError::validation(format!(
            "invalid config {} (line {}, column {}): {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    config.wgan.validate().map_err(CliError::from)?;
    config.reweight.validate().map_err(CliError::from)?;
    config.ga.validate().map_err(CliError::from)?;
    if config.eval.points <= config.eval.k {
        return Err(CliError::validation("eval.points must exceed eval.k"));
    }
    if config.eval.repeats == 0 {
        return Err(CliError::validation("eval.repeats must be >= 1"));
    }
    Ok((config, config_hash(&bytes)))
}

/// Hash of the raw config bytes, embedded in every output file.
pub fn config_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}
