//! 2-D synthetic target distributions, scaled to roughly [-1, 1]^2.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;
use crate::{Error, Result};

/// A named point cloud together with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset2D {
    pub name: String,
    pub points: Tensor,
    pub seed: u64,
}

impl Dataset2D {
    fn new(name: impl Into<String>, points: Vec<[f64; 2]>, seed: u64) -> Self {
        Dataset2D {
            name: name.into(),
            points: Tensor::from_points(&points),
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.points.rows()
    }
}

/// Point on the spiral at parameter t, scaled by 1/15.
pub fn swiss_roll_point(t: f64) -> [f64; 2] {
    [t * t.cos() / 15.0, t * t.sin() / 15.0]
}

/// Swiss roll: t ~ U[1.5 pi, 4.5 pi], point = (t cos t, t sin t) / 15 plus
/// isotropic Gaussian noise of the given standard deviation.
pub fn sample_swiss_roll(n: usize, seed: u64, noise_std: f64) -> Result<Dataset2D> {
    if n == 0 {
        return Err(Error::config("dataset size must be >= 1"));
    }
    if noise_std < 0.0 {
        return Err(Error::config("noise_std must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (1.5 * std::f64::consts::PI, 4.5 * std::f64::consts::PI);
    let points = (0..n)
        .map(|_| {
            let t = rng.random_range(lo..hi);
            let [x, y] = swiss_roll_point(t);
            let nx: f64 = StandardNormal.sample(&mut rng);
            let ny: f64 = StandardNormal.sample(&mut rng);
            [x + noise_std * nx, y + noise_std * ny]
        })
        .collect();
    Ok(Dataset2D::new("swiss_roll", points, seed))
}

/// Grid mixture: mode picked uniformly from a rows x cols grid centered at
/// the origin with the given spacing, plus isotropic Gaussian(std) noise.
/// The default 5 x 5 grid with spacing 0.5 spans [-1, 1] per axis.
pub fn sample_gaussian_grid(
    n: usize,
    rows: usize,
    cols: usize,
    spacing: f64,
    std: f64,
    seed: u64,
) -> Result<Dataset2D> {
    if n == 0 {
        return Err(Error::config("dataset size must be >= 1"));
    }
    if rows * cols == 0 {
        return Err(Error::config("grid needs rows*cols >= 1"));
    }
    let centers = grid_centers(rows, cols, spacing);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let c = centers[rng.random_range(0..centers.len())];
            let nx: f64 = StandardNormal.sample(&mut rng);
            let ny: f64 = StandardNormal.sample(&mut rng);
            [c[0] + std * nx, c[1] + std * ny]
        })
        .collect();
    Ok(Dataset2D::new("gaussian_grid", points, seed))
}

/// Mode centers of the rows x cols grid, centered at the origin.
pub fn grid_centers(rows: usize, cols: usize, spacing: f64) -> Vec<[f64; 2]> {
    let mut centers = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = (c as f64 - (cols as f64 - 1.0) / 2.0) * spacing;
            let y = (r as f64 - (rows as f64 - 1.0) / 2.0) * spacing;
            centers.push([x, y]);
        }
    }
    centers
}

/// The four real mode centers at (+-0.5, +-0.5).
pub const FOUR_GAUSSIAN_MODES: [[f64; 2]; 4] =
    [[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5]];

/// Four-Gaussian target plus the centers of a deliberately misaligned
/// proposal: the same four modes shifted by `offset` along the diagonal
/// (1, 1)/sqrt(2). With offset 0 the proposal modes equal the real modes.
pub fn sample_four_gaussians(
    n: usize,
    seed: u64,
    offset: f64,
    std: f64,
) -> Result<(Dataset2D, [[f64; 2]; 4])> {
    if offset < 0.0 {
        return Err(Error::config("offset must be >= 0"));
    }
    let real = sample_modes("four_gaussians", &FOUR_GAUSSIAN_MODES, n, seed, std)?;
    let shift = offset / std::f64::consts::SQRT_2;
    let proposal_modes = FOUR_GAUSSIAN_MODES.map(|[x, y]| [x + shift, y + shift]);
    Ok((real, proposal_modes))
}

/// Samples from the shifted proposal mixture used to warm-start the
/// imperfect generator of the disconnected-manifold illustration.
pub fn sample_four_gaussian_proposal(
    n: usize,
    seed: u64,
    offset: f64,
    std: f64,
) -> Result<Dataset2D> {
    let shift = offset / std::f64::consts::SQRT_2;
    let modes = FOUR_GAUSSIAN_MODES.map(|[x, y]| [x + shift, y + shift]);
    sample_modes("four_gaussians_proposal", &modes, n, seed, std)
}

fn sample_modes(
    name: &str,
    modes: &[[f64; 2]],
    n: usize,
    seed: u64,
    std: f64,
) -> Result<Dataset2D> {
    if n == 0 {
        return Err(Error::config("dataset size must be >= 1"));
    }
    if std < 0.0 {
        return Err(Error::config("std must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let c = modes[rng.random_range(0..modes.len())];
            let nx: f64 = StandardNormal.sample(&mut rng);
            let ny: f64 = StandardNormal.sample(&mut rng);
            [c[0] + std * nx, c[1] + std * ny]
        })
        .collect();
    Ok(Dataset2D::new(name, points, seed))
}

/// Declarative dataset description used by configs and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    SwissRoll {
        n: usize,
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
    GaussianGrid {
        n: usize,
        #[serde(default = "default_grid_rows")]
        rows: usize,
        #[serde(default = "default_grid_rows")]
        cols: usize,
        #[serde(default = "default_grid_spacing")]
        spacing: f64,
        #[serde(default = "default_mode_std")]
        std: f64,
    },
    FourGaussians {
        n: usize,
        #[serde(default = "default_offset")]
        offset: f64,
        #[serde(default = "default_mode_std")]
        std: f64,
    },
}

fn default_noise_std() -> f64 {
    0.01
}

fn default_grid_rows() -> usize {
    5
}

fn default_grid_spacing() -> f64 {
    0.5
}

fn default_mode_std() -> f64 {
    0.05
}

fn default_offset() -> f64 {
    0.15
}

impl DatasetSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetSpec::SwissRoll { .. } => "swiss_roll",
            DatasetSpec::GaussianGrid { .. } => "gaussian_grid",
            DatasetSpec::FourGaussians { .. } => "four_gaussians",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            DatasetSpec::SwissRoll { n, .. }
            | DatasetSpec::GaussianGrid { n, .. }
            | DatasetSpec::FourGaussians { n, .. } => n,
        }
    }

    /// Samples the target distribution itself.
    pub fn sample(&self, seed: u64) -> Result<Dataset2D> {
        self.sample_n(self.n(), seed)
    }

    /// Samples `n` points from the target distribution.
    pub fn sample_n(&self, n: usize, seed: u64) -> Result<Dataset2D> {
        match *self {
            DatasetSpec::SwissRoll { noise_std, .. } => sample_swiss_roll(n, seed, noise_std),
            DatasetSpec::GaussianGrid { rows, cols, spacing, std, .. } => {
                sample_gaussian_grid(n, rows, cols, spacing, std, seed)
            }
            DatasetSpec::FourGaussians { offset, std, .. } => {
                Ok(sample_four_gaussians(n, seed, offset, std)?.0)
            }
        }
    }

    /// Samples the distribution a freshly pretrained generator should match.
    /// This is the target itself except for the four-Gaussian illustration,
    /// whose generator is deliberately trained on the offset proposal modes.
    pub fn sample_pretrain_target(&self, n: usize, seed: u64) -> Result<Dataset2D> {
        match *self {
            DatasetSpec::FourGaussians { offset, std, .. } => {
                sample_four_gaussian_proposal(n, seed, offset, std)
            }
            _ => self.sample_n(n, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swiss_roll_endpoint() {
        let p = swiss_roll_point(1.5 * std::f64::consts::PI);
        assert!(p[0].abs() < 1e-12);
        assert!((p[1] - (-1.5 * std::f64::consts::PI / 15.0)).abs() < 1e-12);
        assert!((p[1] - (-0.3141592653589793)).abs() < 1e-12);
    }

    #[test]
    fn swiss_roll_bounded() {
        let d = sample_swiss_roll(10_000, 3, 0.01).unwrap();
        assert!(d
            .points
            .values()
            .iter()
            .all(|&v| (-1.05..=1.05).contains(&v)));
    }

    #[test]
    fn swiss_roll_deterministic() {
        let a = sample_swiss_roll(100, 9, 0.01).unwrap();
        let b = sample_swiss_roll(100, 9, 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_one_mode_no_noise_is_origin() {
        let d = sample_gaussian_grid(50, 1, 1, 0.5, 0.0, 4).unwrap();
        assert!(d.points.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_25_modes_geometry() {
        let d = sample_gaussian_grid(10_000, 5, 5, 0.5, 0.0, 4).unwrap();
        let mut distinct: Vec<[f64; 2]> = Vec::new();
        for i in 0..d.n() {
            let p = [d.points.get(i, 0), d.points.get(i, 1)];
            if !distinct.contains(&p) {
                distinct.push(p);
            }
        }
        assert_eq!(distinct.len(), 25);
        let max = d.points.values().iter().cloned().fold(f64::MIN, f64::max);
        let min = d.points.values().iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!(max, 1.0);
        assert_eq!(min, -1.0);
    }

    #[test]
    fn grid_mode_occupancy_is_multinomial() {
        let n = 10_000;
        let d = sample_gaussian_grid(n, 5, 5, 0.5, 0.0, 11).unwrap();
        let centers = grid_centers(5, 5, 0.5);
        let mut counts = vec![0usize; 25];
        for i in 0..d.n() {
            let p = [d.points.get(i, 0), d.points.get(i, 1)];
            let idx = centers.iter().position(|c| *c == p).unwrap();
            counts[idx] += 1;
        }
        // 3-sigma multinomial bound around n/25.
        let p = 1.0 / 25.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let expected = n as f64 * p;
        for &c in &counts {
            assert!((c as f64 - expected).abs() <= 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn four_gaussians_zero_offset_matches_real_modes() {
        let (_, modes) = sample_four_gaussians(10, 0, 0.0, 0.05).unwrap();
        assert_eq!(modes, FOUR_GAUSSIAN_MODES);
    }

    #[test]
    fn four_gaussians_zero_std_has_four_atoms() {
        let (d, _) = sample_four_gaussians(1_000, 2, 0.1, 0.0).unwrap();
        let mut distinct: Vec<[f64; 2]> = Vec::new();
        for i in 0..d.n() {
            let p = [d.points.get(i, 0), d.points.get(i, 1)];
            if !distinct.contains(&p) {
                distinct.push(p);
            }
        }
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn four_gaussians_balanced_occupancy() {
        let n = 10_000;
        let (d, _) = sample_four_gaussians(n, 6, 0.0, 0.0).unwrap();
        let mut counts = [0usize; 4];
        for i in 0..d.n() {
            let p = [d.points.get(i, 0), d.points.get(i, 1)];
            let idx = FOUR_GAUSSIAN_MODES.iter().position(|c| *c == p).unwrap();
            counts[idx] += 1;
        }
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn proposal_modes_shift_along_diagonal() {
        let (_, modes) = sample_four_gaussians(10, 0, 0.2, 0.05).unwrap();
        for (m, r) in modes.iter().zip(FOUR_GAUSSIAN_MODES.iter()) {
            let dx = m[0] - r[0];
            let dy = m[1] - r[1];
            assert!((dx - dy).abs() < 1e-15);
            assert!(((dx * dx + dy * dy).sqrt() - 0.2).abs() < 1e-12);
        }
    }
}
