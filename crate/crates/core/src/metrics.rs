//! Evaluation metrics: exact EMD, k-NN precision/recall, a raw-coordinate
//! Fréchet distance on 2 x 2 moments, and 97% confidence intervals.

use serde::{Deserialize, Serialize};

use crate::tensor::{dist2, Tensor};
use crate::{Error, Result};

/// Two-sided 97% normal quantile used for all confidence intervals.
pub const Z_97: f64 = 2.17;

/// Where a point set came from, for bookkeeping in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    RawGenerated,
    MethodFiltered,
}

/// A point set tagged with its provenance.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub points: Tensor,
    pub provenance: Provenance,
}

impl SampleSet {
    pub fn new(points: Tensor, provenance: Provenance) -> Result<Self> {
        if points.cols() != 2 {
            return Err(Error::config("sample sets are n x 2"));
        }
        if !points.is_finite() {
            return Err(Error::numeric("sample set contains non-finite points"));
        }
        Ok(SampleSet { points, provenance })
    }
}

/// Mean optimal-assignment transport cost between two equal-size sets.
///
/// Solves the n x n assignment problem exactly in O(n^3) and reports the
/// matched-cost sum divided by n, so values are per-point.
pub fn emd(x: &Tensor, y: &Tensor) -> Result<f64> {
    if x.cols() != 2 || y.cols() != 2 {
        return Err(Error::config("emd expects n x 2 point sets"));
    }
    if x.rows() != y.rows() {
        return Err(Error::config(format!(
            "emd expects equal cardinalities, got {} vs {}",
            x.rows(),
            y.rows()
        )));
    }
    let n = x.rows();
    if n == 0 {
        return Err(Error::config("emd needs at least one point"));
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = dist2(x.row(i), y.row(j));
        }
    }
    let assignment = solve_assignment(&cost, n);
    let total: f64 = (0..n).map(|i| cost[i * n + assignment[i]]).sum();
    Ok(total / n as f64)
}

/// Exact minimum-cost assignment via shortest augmenting paths with
/// potentials (Jonker-Volgenant style). Returns the column matched to each
/// row.
pub fn solve_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    // 1-based arrays; p[j] is the row assigned to column j, p[0] is scratch.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    row_to_col
}

/// k-NN coverage precision and recall.
///
/// A real point is recalled if it lies inside the k-th-nearest-neighbor
/// ball of some fake point (neighbors measured among the fake set);
/// precision swaps the roles. Requires n > k on both sides.
pub fn precision_recall(real: &Tensor, fake: &Tensor, k: usize) -> Result<(f64, f64)> {
    if real.cols() != 2 || fake.cols() != 2 {
        return Err(Error::config("precision_recall expects n x 2 point sets"));
    }
    if real.rows() <= k || fake.rows() <= k {
        return Err(Error::config(format!(
            "precision_recall needs more than k={k} points per set"
        )));
    }
    let recall = coverage(real, fake, k);
    let precision = coverage(fake, real, k);
    Ok((precision, recall))
}

/// Fraction of `queries` lying within the k-NN ball of some point of `set`.
fn coverage(queries: &Tensor, set: &Tensor, k: usize) -> f64 {
    let radii = knn_radii(set, k);
    let mut covered = 0usize;
    for i in 0..queries.rows() {
        let q = queries.row(i);
        let hit = (0..set.rows()).any(|j| dist2(q, set.row(j)) <= radii[j]);
        if hit {
            covered += 1;
        }
    }
    covered as f64 / queries.rows() as f64
}

/// Distance from each point to its k-th nearest neighbor within the same
/// set (the point itself excluded).
fn knn_radii(points: &Tensor, k: usize) -> Vec<f64> {
    let n = points.rows();
    let mut radii = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n - 1);
    for j in 0..n {
        dists.clear();
        for l in 0..n {
            if l != j {
                dists.push(dist2(points.row(j), points.row(l)));
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        radii.push(dists[k - 1]);
    }
    radii
}

/// Fréchet distance between the Gaussian moment matches of two 2-D sets:
/// ||mu_x - mu_y||^2 + tr(Sx + Sy - 2 (Sx Sy)^{1/2}).
///
/// Sample covariances use the n-1 denominator and get +1e-9 on the
/// diagonal so degenerate sets stay well-defined; the trace of the matrix
/// square root is evaluated in closed form for 2 x 2 matrices.
pub fn frechet_2d(x: &Tensor, y: &Tensor) -> Result<f64> {
    if x.cols() != 2 || y.cols() != 2 {
        return Err(Error::config("frechet_2d expects n x 2 point sets"));
    }
    if x.rows() < 3 || y.rows() < 3 {
        return Err(Error::config("frechet_2d needs at least 3 points per set"));
    }
    let (mx, sx) = mean_cov(x);
    let (my, sy) = mean_cov(y);
    let dmu = (mx[0] - my[0]).powi(2) + (mx[1] - my[1]).powi(2);
    // Product of the two covariance matrices.
    let prod = [
        sx[0] * sy[0] + sx[1] * sy[2],
        sx[0] * sy[1] + sx[1] * sy[3],
        sx[2] * sy[0] + sx[3] * sy[2],
        sx[2] * sy[1] + sx[3] * sy[3],
    ];
    let tr_prod = prod[0] + prod[3];
    let det_prod = prod[0] * prod[3] - prod[1] * prod[2];
    // tr sqrt(M) = sqrt(tr M + 2 sqrt(det M)) for 2 x 2 with real
    // non-negative eigenvalues.
    let tr_sqrt = (tr_prod + 2.0 * det_prod.max(0.0).sqrt()).max(0.0).sqrt();
    Ok(dmu + (sx[0] + sx[3]) + (sy[0] + sy[3]) - 2.0 * tr_sqrt)
}

/// Sample mean and jittered sample covariance [xx, xy, yx, yy].
fn mean_cov(points: &Tensor) -> ([f64; 2], [f64; 4]) {
    let n = points.rows() as f64;
    let mut mean = [0.0; 2];
    for i in 0..points.rows() {
        mean[0] += points.get(i, 0);
        mean[1] += points.get(i, 1);
    }
    mean[0] /= n;
    mean[1] /= n;
    let mut cov = [0.0; 4];
    for i in 0..points.rows() {
        let dx = points.get(i, 0) - mean[0];
        let dy = points.get(i, 1) - mean[1];
        cov[0] += dx * dx;
        cov[1] += dx * dy;
        cov[3] += dy * dy;
    }
    let denom = n - 1.0;
    cov[0] = cov[0] / denom + 1e-9;
    cov[1] /= denom;
    cov[2] = cov[1];
    cov[3] = cov[3] / denom + 1e-9;
    (mean, cov)
}

/// Mean and 97% CI half-width (normal quantile 2.17, sample std with n-1).
pub fn ci_report(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::config("ci_report needs at least 2 values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, Z_97 * var.sqrt() / n.sqrt()))
}

/// One aggregated metric: mean with CI half-width over repeats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricStat {
    pub name: String,
    pub mean: f64,
    pub ci97_half_width: f64,
    pub n_repeats: usize,
}

impl MetricStat {
    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Result<Self> {
        let (mean, half) = if values.len() == 1 {
            (values[0], 0.0)
        } else {
            ci_report(values)?
        };
        Ok(MetricStat {
            name: name.into(),
            mean,
            ci97_half_width: half,
            n_repeats: values.len(),
        })
    }
}

/// Full evaluation report for one (dataset, method) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metrics: Vec<MetricStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_us: Option<MetricStat>,
}
