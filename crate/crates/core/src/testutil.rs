//! Shared test fixtures.

use crate::nn::{Activation, Mlp, MlpParams, MlpSpec};
use crate::tensor::Tensor;

/// Builds an MLP computing an exact linear map x -> x * matrix via paired
/// relus: relu(x) - relu(-x) = x, so one hidden layer of width 2*in
/// suffices and the map is linear everywhere (gradient defined a.e.).
pub(crate) fn linear_mlp(matrix: &Tensor) -> Mlp {
    let (n_in, n_out) = matrix.shape();
    let mut w1 = Tensor::zeros(n_in, 2 * n_in);
    for i in 0..n_in {
        w1.set(i, i, 1.0);
        w1.set(i, n_in + i, -1.0);
    }
    let mut w2 = Tensor::zeros(2 * n_in, n_out);
    for i in 0..n_in {
        for j in 0..n_out {
            w2.set(i, j, matrix.get(i, j));
            w2.set(n_in + i, j, -matrix.get(i, j));
        }
    }
    let spec = MlpSpec::new(
        vec![n_in, 2 * n_in, n_out],
        Activation::Relu,
        Activation::Identity,
    )
    .unwrap();
    let params = MlpParams {
        layers: vec![
            (w1, Tensor::zeros(1, 2 * n_in)),
            (w2, Tensor::zeros(1, n_out)),
        ],
    };
    Mlp::new(spec, params).unwrap()
}

/// A critic of the spec's default shape with every parameter zero, so its
/// output and input-gradient vanish identically.
pub(crate) fn zero_critic() -> Mlp {
    let spec = MlpSpec::new(
        vec![2, 8, 1],
        Activation::LeakyRelu { slope: 0.2 },
        Activation::Identity,
    )
    .unwrap();
    let params = MlpParams {
        layers: vec![
            (Tensor::zeros(2, 8), Tensor::zeros(1, 8)),
            (Tensor::zeros(8, 1), Tensor::zeros(1, 1)),
        ],
    };
    Mlp::new(spec, params).unwrap()
}
