//! Metric providers: metric components and their coordinate derivatives.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QeError, Result};
use crate::fd;
use crate::field::Monomial;

/// Admissible region of a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Closed coordinate box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `|x| > rho` in `R^n`.
    Exterior { n: usize, rho: f64 },
}

impl Domain {
    pub fn cube(n: usize, half: f64) -> Self {
        Domain::Box { lo: vec![-half; n], hi: vec![half; n] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Exterior { n, .. } => *n,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Domain::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= *l && *v <= *h),
            Domain::Exterior { rho, .. } => x.iter().map(|v| v * v).sum::<f64>().sqrt() > *rho,
        }
    }

    /// Like [`Domain::contains`], with box faces pushed out by `slack`
    /// so finite-difference stencils centered on the boundary stay admissible.
    pub fn contains_with_slack(&self, x: &[f64], slack: f64) -> bool {
        match self {
            Domain::Box { lo, hi } => {
                x.len() == lo.len()
                    && x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| v.is_finite() && *v >= l - slack && *v <= h + slack)
            }
            Domain::Exterior { .. } => self.contains(x),
        }
    }

    /// Center of a box domain.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            Domain::Exterior { n, rho } => {
                let mut c = vec![0.0; *n];
                c[0] = 2.0 * rho;
                c
            }
        }
    }

    /// Tensor grid with `count` points per axis (box domains only).
    pub fn grid(&self, count: usize) -> Vec<Vec<f64>> {
        let Domain::Box { lo, hi } = self else {
            return Vec::new();
        };
        let n = lo.len();
        let axis = |i: usize, k: usize| {
            if count <= 1 {
                0.5 * (lo[i] + hi[i])
            } else {
                lo[i] + (hi[i] - lo[i]) * k as f64 / (count - 1) as f64
            }
        };
        let total = count.pow(n as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; n];
                for i in (0..n).rev() {
                    p[i] = axis(i, idx % count);
                    idx /= count;
                }
                p
            })
            .collect()
    }
}

/// Source of metric components `g_ij(x)` on a chart.
///
/// `metric_d1` returns `d[k] = d_k g`, `metric_d2` returns `dd[l][k] = d_l d_k g`.
/// Providers without closed-form derivatives fall back to central differences.
pub trait MetricProvider: Send + Sync {
    fn dim(&self) -> usize;

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;

    fn has_analytic_d1(&self) -> bool {
        false
    }

    fn metric_d1(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        let cols = fd::jacobian_vec(|y| Ok(self.metric(y)?.as_slice().to_vec()), x, self.fd_scale())?;
        Ok(cols.into_iter().map(|c| DMatrix::from_column_slice(n, n, &c)).collect())
    }

    fn metric_d2(&self, x: &[f64]) -> Result<Vec<Vec<DMatrix<f64>>>> {
        let n = self.dim();
        if self.has_analytic_d1() {
            let flat = |y: &[f64]| -> Result<Vec<f64>> {
                Ok(self.metric_d1(y)?.iter().flat_map(|m| m.as_slice().to_vec()).collect())
            };
            let j = fd::jacobian_vec(flat, x, self.fd_scale())?;
            let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
            for l in 0..n {
                for k in 0..n {
                    let block = &j[l][k * n * n..(k + 1) * n * n];
                    out[l][k] = DMatrix::from_column_slice(n, n, block);
                }
            }
            // symmetrize in (l, k)
            for l in 0..n {
                for k in (l + 1)..n {
                    let avg = (&out[l][k] + &out[k][l]) * 0.5;
                    out[l][k] = avg.clone();
                    out[k][l] = avg;
                }
            }
            Ok(out)
        } else {
            let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
            for a in 0..n {
                for b in a..n {
                    let h = fd::hessian_from_values(|y| Ok(self.metric(y)?[(a, b)]), x)?;
                    for l in 0..n {
                        for k in 0..n {
                            out[l][k][(a, b)] = h[(l, k)];
                            out[l][k][(b, a)] = h[(l, k)];
                        }
                    }
                }
            }
            Ok(out)
        }
    }

    fn admissible(&self, _x: &[f64]) -> bool {
        true
    }

    /// Multiplier on the default finite-difference steps.
    fn fd_scale(&self) -> f64 {
        1.0
    }
}

/// Diagonal metric whose components are separable products.
#[derive(Debug, Clone)]
pub struct DiagonalMetric {
    pub components: Vec<Monomial>,
    pub domain: Domain,
}

impl DiagonalMetric {
    pub fn new(components: Vec<Monomial>, domain: Domain) -> Self {
        assert_eq!(components.len(), domain.dim());
        Self { components, domain }
    }

    fn jets(&self, x: &[f64]) -> Result<Vec<(f64, Vec<f64>, DMatrix<f64>)>> {
        self.components.iter().map(|c| c.jet(x)).collect()
    }
}

impl MetricProvider for DiagonalMetric {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            g[(i, i)] = c.jet(x)?.0;
        }
        Ok(g)
    }

    fn has_analytic_d1(&self) -> bool {
        true
    }

    fn metric_d1(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        let jets = self.jets(x)?;
        Ok((0..n)
            .map(|k| {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = jets[i].1[k];
                }
                m
            })
            .collect())
    }

    fn metric_d2(&self, x: &[f64]) -> Result<Vec<Vec<DMatrix<f64>>>> {
        let n = self.dim();
        let jets = self.jets(x)?;
        Ok((0..n)
            .map(|l| {
                (0..n)
                    .map(|k| {
                        let mut m = DMatrix::zeros(n, n);
                        for i in 0..n {
                            m[(i, i)] = jets[i].2[(l, k)];
                        }
                        m
                    })
                    .collect()
            })
            .collect())
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.domain.contains_with_slack(x, BOX_SLACK)
    }
}

/// Tolerance on box faces used by [`DiagonalMetric::admissible`].
pub const BOX_SLACK: f64 = 1e-2;

/// Radial conformal factors `w(r)` for `g = w(|x|) delta` on an exterior domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalFactor {
    Flat,
    /// `(1 + M / 2r)^4`, the time-symmetric Schwarzschild slice.
    Schwarzschild { mass: f64 },
    /// `1 + amp r^(-tau)`
    PowerLaw { amp: f64, tau: f64 },
}

impl ConformalFactor {
    fn eval(&self, r: f64) -> [f64; 3] {
        match *self {
            ConformalFactor::Flat => [1.0, 0.0, 0.0],
            ConformalFactor::Schwarzschild { mass } => {
                let psi = 1.0 + mass / (2.0 * r);
                let dpsi = -mass / (2.0 * r * r);
                let ddpsi = mass / (r * r * r);
                [psi.powi(4), 4.0 * psi.powi(3) * dpsi, 12.0 * psi * psi * dpsi * dpsi + 4.0 * psi.powi(3) * ddpsi]
            }
            ConformalFactor::PowerLaw { amp, tau } => {
                let v = amp * r.powf(-tau);
                [1.0 + v, -tau * v / r, tau * (tau + 1.0) * v / (r * r)]
            }
        }
    }
}

/// Conformally flat metric `w(|x|) delta_ij` outside a ball.
#[derive(Debug, Clone)]
pub struct ConformallyFlat {
    pub factor: ConformalFactor,
    pub domain: Domain,
}

impl ConformallyFlat {
    pub fn new(factor: ConformalFactor, n: usize, rho: f64) -> Self {
        Self { factor, domain: Domain::Exterior { n, rho } }
    }

    fn radius(x: &[f64]) -> Result<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 {
            Ok(r)
        } else {
            Err(QeError::Inadmissible(x.to_vec()))
        }
    }
}

impl MetricProvider for ConformallyFlat {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let w = self.factor.eval(Self::radius(x)?)[0];
        Ok(DMatrix::identity(self.dim(), self.dim()) * w)
    }

    fn has_analytic_d1(&self) -> bool {
        true
    }

    fn metric_d1(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let r = Self::radius(x)?;
        let d = self.factor.eval(r)[1];
        let n = self.dim();
        Ok((0..n).map(|k| DMatrix::identity(n, n) * (d * x[k] / r)).collect())
    }

    fn metric_d2(&self, x: &[f64]) -> Result<Vec<Vec<DMatrix<f64>>>> {
        let r = Self::radius(x)?;
        let [_, d, dd] = self.factor.eval(r);
        let n = self.dim();
        Ok((0..n)
            .map(|l| {
                (0..n)
                    .map(|k| {
                        let (nl, nk) = (x[l] / r, x[k] / r);
                        let delta = if l == k { 1.0 } else { 0.0 };
                        DMatrix::identity(n, n) * (dd * nl * nk + d * (delta - nl * nk) / r)
                    })
                    .collect()
            })
            .collect())
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.domain.contains(x)
    }
}

/// Hides any analytic derivatives of the wrapped provider, forcing the
/// finite-difference fallback.
pub struct FdOnly<'a>(pub &'a dyn MetricProvider);

impl MetricProvider for FdOnly<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.0.metric(x)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.0.admissible(x)
    }
}

/// Closure-backed provider for user metrics.
pub struct FnMetric<F> {
    pub dim: usize,
    pub eval: F,
    pub domain: Option<Domain>,
}

impl<F> MetricProvider for FnMetric<F>
where
    F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = (self.eval)(x);
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(QeError::Dimension { expected: self.dim, got: g.nrows() });
        }
        Ok(g)
    }

    fn admissible(&self, x: &[f64]) -> bool {
        self.domain.as_ref().map_or(true, |d| d.contains(x))
    }
}
