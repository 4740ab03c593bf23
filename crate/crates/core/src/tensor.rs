//! Dense row-major 2-D arrays of 64-bit reals.
//!
//! This is the single numeric container shared by the autodiff graph, the
//! networks, the data generators and the metrics, so every code path sums
//! and multiplies in the same order.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::config(format!(
                "tensor of shape {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Tensor { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor { rows, cols, values: vec![value; rows * cols] }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor { rows: 1, cols: 1, values: vec![value] }
    }

    /// Builds an n x 2 tensor from a list of planar points.
    pub fn from_points(points: &[[f64; 2]]) -> Self {
        let mut values = Vec::with_capacity(points.len() * 2);
        for p in points {
            values.push(p[0]);
            values.push(p[1]);
        }
        Tensor { rows: points.len(), cols: 2, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if !self.same_shape(other) {
            return Err(Error::config(format!(
                "elementwise op on mismatched shapes {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Tensor { rows: self.rows, cols: self.cols, values })
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.cols != other.rows {
            return Err(Error::config(format!(
                "matmul shape mismatch: {:?} x {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; n * m];
        // ikj accumulation, two k-steps per pass for instruction-level
        // parallelism on the output row.
        for i in 0..n {
            let a_row = &self.values[i * k..(i + 1) * k];
            let o_row = &mut out[i * m..(i + 1) * m];
            let mut l = 0;
            while l + 1 < k {
                let a0 = a_row[l];
                let a1 = a_row[l + 1];
                let b0 = &other.values[l * m..(l + 1) * m];
                let b1 = &other.values[(l + 1) * m..(l + 2) * m];
                for j in 0..m {
                    o_row[j] += a0 * b0[j] + a1 * b1[j];
                }
                l += 2;
            }
            if l < k {
                let a0 = a_row[l];
                let b0 = &other.values[l * m..(l + 1) * m];
                for j in 0..m {
                    o_row[j] += a0 * b0[j];
                }
            }
        }
        Ok(Tensor { rows: n, cols: m, values: out })
    }

    pub fn transpose(&self) -> Tensor {
        let mut values = vec![0.0; self.values.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                values[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        Tensor { rows: self.cols, cols: self.rows, values }
    }

    /// Adds a 1 x n bias row to every row of a b x n tensor.
    pub fn add_bias(&self, bias: &Tensor) -> Result<Tensor> {
        if bias.rows != 1 || bias.cols != self.cols {
            return Err(Error::config(format!(
                "bias shape {:?} incompatible with {:?}",
                bias.shape(),
                self.shape()
            )));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            let row = &mut out.values[i * self.cols..(i + 1) * self.cols];
            for (o, &b) in row.iter_mut().zip(&bias.values) {
                *o += b;
            }
        }
        Ok(out)
    }

    /// Column sums: b x n -> 1 x n.
    pub fn sum_rows(&self) -> Tensor {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.values[i * self.cols..(i + 1) * self.cols];
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        Tensor { rows: 1, cols: self.cols, values: out }
    }

    /// Row sums: b x n -> b x 1.
    pub fn sum_cols(&self) -> Tensor {
        let values = (0..self.rows).map(|i| self.row(i).iter().sum()).collect();
        Tensor { rows: self.rows, cols: 1, values }
    }

    pub fn sum_all(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean_all(&self) -> f64 {
        self.sum_all() / self.values.len() as f64
    }

    pub fn min_all(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn broadcast_rows(&self, rows: usize) -> Result<Tensor> {
        if self.rows != 1 {
            return Err(Error::config("broadcast_rows expects a 1 x n tensor".to_string()));
        }
        let mut values = Vec::with_capacity(rows * self.cols);
        for _ in 0..rows {
            values.extend_from_slice(&self.values);
        }
        Ok(Tensor { rows, cols: self.cols, values })
    }

    pub fn broadcast_cols(&self, cols: usize) -> Result<Tensor> {
        if self.cols != 1 {
            return Err(Error::config("broadcast_cols expects a b x 1 tensor".to_string()));
        }
        let mut values = Vec::with_capacity(self.rows * cols);
        for &v in &self.values {
            values.extend(std::iter::repeat(v).take(cols));
        }
        Ok(Tensor { rows: self.rows, cols, values })
    }
}

/// Euclidean distance between two planar points.
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}
