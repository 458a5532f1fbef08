//! Small dense containers for chart points and coordinate tensors.
//!
//! Dimensions are tiny (n <= 4), so everything is stored flat in row-major
//! order and indexed by hand.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QeError, Result};

pub const MAX_DIM: usize = 4;

/// A point in a coordinate chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: Vec<f64>,
    #[serde(default)]
    pub chart_id: u32,
}

impl ChartPoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords = coords.into();
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(QeError::Dimension { expected: MAX_DIM, got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(QeError::Evaluation("chart point coordinates".into()));
        }
        Ok(Self { coords, chart_id: 0 })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl AsRef<[f64]> for ChartPoint {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Symmetric rank-2 covariant tensor in coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2(DMatrix<f64>);

impl SymTensor2 {
    /// Builds from a square matrix, averaging with its transpose.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SymTensor2 needs a square matrix");
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    /// `g^{ij} T_ij` with `ginv` the inverse metric.
    pub fn trace_with(&self, ginv: &DMatrix<f64>) -> f64 {
        ginv.component_mul(&self.0).sum()
    }

    /// Metric norm `sqrt(g^{ik} g^{jl} T_ij T_kl)`.
    pub fn norm_with(&self, ginv: &DMatrix<f64>) -> f64 {
        let raised = ginv * &self.0 * ginv;
        raised.component_mul(&self.0).sum().max(0.0).sqrt()
    }

    /// Bilinear evaluation `T(v, w)`.
    pub fn apply(&self, v: &[f64], w: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.0[(i, j)] * v[i] * w[j];
            }
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

/// Rank-3 coordinate array, index order `[a][b][c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.n + b) * self.n + c] = v;
    }

    #[inline]
    pub fn add_to(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.n + b) * self.n + c] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Rank-4 coordinate array, index order `[a][b][c][d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let n = self.n;
        self.data[((a * n + b) * n + c) * n + d] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Metric norm of a covector, `sqrt(g^{ij} w_i w_j)`.
pub fn covector_norm(ginv: &DMatrix<f64>, w: &[f64]) -> f64 {
    let v = DVector::from_column_slice(w);
    (v.transpose() * ginv * &v)[(0, 0)].max(0.0).sqrt()
}

/// Raises a covector with the inverse metric.
pub fn raise(ginv: &DMatrix<f64>, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    (0..n).map(|i| (0..n).map(|j| ginv[(i, j)] * w[j]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_tensor_is_symmetrized() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let t = SymTensor2::from_matrix(m);
        assert_eq!(t.get(0, 1), t.get(1, 0));
        assert_eq!(t.get(0, 1), 1.0);
    }

    #[test]
    fn norms_on_euclidean() {
        let g = DMatrix::identity(3, 3);
        let t = SymTensor2::from_fn(3, |i, j| if i == j { 2.0 } else { 0.0 });
        assert!((t.norm_with(&g) - 12f64.sqrt()).abs() < 1e-15);
        assert_eq!(t.trace_with(&g), 6.0);
        assert!((covector_norm(&g, &[3.0, 4.0, 0.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn chart_point_rejects_bad_input() {
        assert!(ChartPoint::new(vec![f64::NAN]).is_err());
        assert!(ChartPoint::new(vec![0.0; 5]).is_err());
        assert!(ChartPoint::new(vec![1.0, 2.0]).is_ok());
    }
}
