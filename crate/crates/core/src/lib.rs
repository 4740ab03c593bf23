//! Latent reweighting for pretrained GANs on 2-D synthetic data.
//!
//! The crate trains a non-negative importance-weight network over the latent
//! space of a frozen generator so that the reweighted push-forward
//! distribution moves closer to the data in Wasserstein distance, then
//! samples from it with latent rejection sampling, latent gradient ascent,
//! or both. Density-ratio baselines (DRS, SIR, MH, DOT) and the evaluation
//! metrics used to compare them are included.

pub mod autodiff;
pub mod error;
pub mod heatmap;
pub mod metrics;
pub mod nn;
pub mod reweight;
pub mod samplers;
pub mod synthdata;
pub mod tensor;
#[cfg(test)]
pub(crate) mod testutil;
pub mod wgan;

pub use error::Error;
pub use tensor::Tensor;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
