//! Importance-weight heatmaps over a 2-D latent grid.

use crate::nn::{LatentPrior, Mlp, PriorKind};
use crate::tensor::Tensor;
use crate::{Error, Result};

/// A regular grid of importance-weight values over the latent plane.
#[derive(Debug, Clone)]
pub struct HeatmapGrid {
    /// Grid resolution per axis.
    pub resolution: usize,
    /// Axis range: [-3, 3] for a Gaussian prior, [-1, 1] for uniform.
    pub lo: f64,
    pub hi: f64,
    /// Row-major values, row = z2 index, column = z1 index.
    pub values: Vec<f64>,
    /// z1 coordinate per column / z2 coordinate per row.
    pub coords: Vec<f64>,
}

impl HeatmapGrid {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }
}

/// Evaluates the importance net on a resolution x resolution grid covering
/// the prior's plotting box. Requires a 2-D latent space; for higher
/// dimensions use [`importance_grid_slice`].
pub fn importance_grid(
    importance: &Mlp,
    prior: &LatentPrior,
    resolution: usize,
) -> Result<HeatmapGrid> {
    if prior.dim != 2 {
        return Err(Error::config(
            "heatmap rendering needs a 2-D latent space (use a slice for d > 2)",
        ));
    }
    importance_grid_slice(importance, prior, resolution, (0, 1))
}

/// Grid over a 2-D axis-aligned slice of the latent space: the two chosen
/// coordinates sweep the plotting box, the rest stay at zero.
pub fn importance_grid_slice(
    importance: &Mlp,
    prior: &LatentPrior,
    resolution: usize,
    dims: (usize, usize),
) -> Result<HeatmapGrid> {
    if resolution < 2 {
        return Err(Error::config("heatmap resolution must be >= 2"));
    }
    let d = prior.dim;
    if dims.0 >= d || dims.1 >= d || dims.0 == dims.1 {
        return Err(Error::config(format!(
            "slice dims {:?} invalid for a {d}-dimensional latent space",
            dims
        )));
    }
    let (lo, hi) = match prior.kind {
        PriorKind::Gaussian => (-3.0, 3.0),
        PriorKind::Uniform => (-1.0, 1.0),
    };
    let coords: Vec<f64> = (0..resolution)
        .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
        .collect();
    let mut points = vec![0.0; resolution * resolution * d];
    for (row, &z2) in coords.iter().enumerate() {
        for (col, &z1) in coords.iter().enumerate() {
            let base = (row * resolution + col) * d;
            points[base + dims.0] = z1;
            points[base + dims.1] = z2;
        }
    }
    let z = Tensor::new(resolution * resolution, d, points)?;
    let values = importance.forward(&z)?.into_values();
    Ok(HeatmapGrid { resolution, lo, hi, values, coords })
}

/// Counts strict 8-neighborhood local maxima above `min_value` on the
/// interior of the grid.
pub fn local_maxima_count(grid: &HeatmapGrid, min_value: f64) -> usize {
    let r = grid.resolution;
    let mut count = 0;
    for i in 1..r - 1 {
        for j in 1..r - 1 {
            let v = grid.value(i, j);
            if v <= min_value {
                continue;
            }
            let mut is_max = true;
            'outer: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = (i as i64 + di) as usize;
                    let nj = (j as i64 + dj) as usize;
                    if grid.value(ni, nj) >= v {
                        is_max = false;
                        break 'outer;
                    }
                }
            }
            if is_max {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, MlpParams, MlpSpec};

    fn constant_net(value: f64) -> Mlp {
        let spec = MlpSpec::new(vec![2, 4, 1], Activation::Relu, Activation::Relu).unwrap();
        let params = MlpParams {
            layers: vec![
                (Tensor::zeros(2, 4), Tensor::zeros(1, 4)),
                (Tensor::zeros(4, 1), Tensor::new(1, 1, vec![value]).unwrap()),
            ],
        };
        Mlp::new(spec, params).unwrap()
    }

    #[test]
    fn constant_net_gives_uniform_grid() {
        let net = constant_net(0.7);
        let grid = importance_grid(&net, &LatentPrior::gaussian(2), 16).unwrap();
        assert_eq!(grid.values.len(), 256);
        assert!(grid.values.iter().all(|&v| v == 0.7));
        assert_eq!(local_maxima_count(&grid, 0.0), 0);
    }

    #[test]
    fn grid_has_resolution_squared_cells_and_prior_range() {
        let net = constant_net(1.0);
        let g = importance_grid(&net, &LatentPrior::gaussian(2), 9).unwrap();
        assert_eq!(g.values.len(), 81);
        assert_eq!((g.lo, g.hi), (-3.0, 3.0));
        let u = importance_grid(&net, &LatentPrior::uniform(2), 9).unwrap();
        assert_eq!((u.lo, u.hi), (-1.0, 1.0));
    }

    #[test]
    fn counts_isolated_bumps() {
        let resolution = 11;
        let mut grid = HeatmapGrid {
            resolution,
            lo: -1.0,
            hi: 1.0,
            values: vec![0.0; resolution * resolution],
            coords: (0..resolution).map(|i| i as f64).collect(),
        };
        for (i, j) in [(2, 2), (2, 8), (8, 2), (8, 8)] {
            grid.values[i * resolution + j] = 1.0;
        }
        assert_eq!(local_maxima_count(&grid, 0.1), 4);
        // Threshold above the bumps suppresses them.
        assert_eq!(local_maxima_count(&grid, 2.0), 0);
    }
}
