//! Model bundle persistence.
//!
//! A bundle is a single JSON document holding the prior, the network specs
//! and parameters, the stage configs and provenance. Parameter tensors are
//! stored as hex-encoded little-endian f64 blobs per layer, so round-trips
//! are bit-exact and headers stay diff-able.

use std::path::Path;

use serde::{Deserialize, Serialize};

use latentrw::nn::{LatentPrior, Mlp, MlpParams, MlpSpec};
use latentrw::reweight::ReweightConfig;
use latentrw::samplers::{FinetuneConfig, GaConfig, RatioModel};
use latentrw::synthdata::DatasetSpec;
use latentrw::tensor::Tensor;
use latentrw::wgan::WganConfig;

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub master_seed: u64,
    pub config_hash: String,
    /// Stages this bundle has been through, in order.
    pub provenance: Vec<String>,
    pub prior: LatentPrior,
    /// Target distribution the pipeline runs against.
    pub dataset: DatasetSpec,
    pub generator: NetBlob,
    pub critic: NetBlob,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<NetBlob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_model: Option<NetBlob>,
    pub configs: BundleConfigs,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BundleConfigs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wgan: Option<WganConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reweight: Option<ReweightConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finetune: Option<FinetuneConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samplers: Option<crate::config::SamplerConfig>,
}

/// A network spec plus hex-encoded parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetBlob {
    pub spec: MlpSpec,
    pub layers: Vec<LayerBlob>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerBlob {
    pub weight: String,
    pub bias: String,
}

fn encode_tensor(t: &Tensor) -> String {
    let mut bytes = Vec::with_capacity(t.len() * 8);
    for v in t.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    hex::encode(bytes)
}

fn decode_tensor(hex_str: &str, rows: usize, cols: usize) -> CliResult<Tensor> {
    let bytes = hex::decode(hex_str)
        .map_err(|e| CliError::validation(format!("bad parameter blob: {e}")))?;
    if bytes.len() != rows * cols * 8 {
        return Err(CliError::validation(format!(
            "parameter blob holds {} bytes, expected {} for a {rows}x{cols} tensor",
            bytes.len(),
            rows * cols * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::numeric("parameter blob contains non-finite values"));
    }
    Ok(Tensor::new(rows, cols, values).map_err(CliError::from)?)
}

impl NetBlob {
    pub fn from_mlp(net: &Mlp) -> Self {
        NetBlob {
            spec: net.spec.clone(),
            layers: net
                .params
                .layers
                .iter()
                .map(|(w, b)| LayerBlob {
                    weight: encode_tensor(w),
                    bias: encode_tensor(b),
                })
                .collect(),
        }
    }

    pub fn to_mlp(&self) -> CliResult<Mlp> {
        let widths = &self.spec.layers;
        if self.layers.len() + 1 != widths.len() {
            return Err(CliError::validation(
                "bundle layer count does not match its spec",
            ));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (blob, io) in self.layers.iter().zip(widths.windows(2)) {
            let w = decode_tensor(&blob.weight, io[0], io[1])?;
            let b = decode_tensor(&blob.bias, 1, io[1])?;
            layers.push((w, b));
        }
        Ok(Mlp::new(self.spec.clone(), MlpParams { layers }).map_err(CliError::from)?)
    }
}

impl ModelBundle {
    pub fn generator(&self) -> CliResult<Mlp> {
        self.generator.to_mlp()
    }

    pub fn critic(&self) -> CliResult<Mlp> {
        self.critic.to_mlp()
    }

    pub fn importance(&self) -> CliResult<Option<Mlp>> {
        self.importance.as_ref().map(|b| b.to_mlp()).transpose()
    }

    pub fn ratio_model(&self) -> CliResult<Option<RatioModel>> {
        Ok(self
            .ratio_model
            .as_ref()
            .map(|b| b.to_mlp())
            .transpose()?
            .map(|logit| RatioModel { logit, sigmoid_head: true }))
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::validation(format!("bundle serialization failed: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| {
            CliError::validation(format!("cannot read bundle {}: {e}", path.display()))
        })?;
        let bundle: ModelBundle = serde_json::from_slice(&bytes).map_err(|e| {
            CliError::validation(format!(
                "invalid bundle {} (line {}, column {}): {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })?;
        if bundle.format_version != FORMAT_VERSION {
            return Err(CliError::validation(format!(
                "unrecognized bundle format version {}",
                bundle.format_version
            )));
        }
        Ok(bundle)
    }
}
