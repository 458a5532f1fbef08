//! Levi-Civita geometry of a chart: Christoffel symbols, curvature, and
//! covariant derivatives of scalar fields.
//!
//! Curvature sign convention: the all-lower Riemann tensor `Rm[c][b][a][d]`
//! satisfies the Ricci identity
//! `u_{;a b c} - u_{;a c b} = Rm[c][b][a][d] u^{;d}` (derivative slots read
//! left to right as `c`, `b`), its trace over `(c, a)` is Ricci, and on a
//! space of constant curvature `K` it equals `K (g_ca g_bd - g_cd g_ba)`.
//! With this convention the three-dimensional decomposition in
//! [`riemann_from_ricci_3d`] holds verbatim and round spheres have positive
//! scalar curvature.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{QeError, Result};
use crate::fd;
use crate::field::ScalarField;
use crate::metric::MetricProvider;
use crate::tensor::{SymTensor2, Tensor3, Tensor4};

/// Christoffel symbols, Ricci tensor and scalar curvature at a point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    /// `christoffel.get(k, i, j) = Gamma^k_ij`
    pub christoffel: Tensor3,
    pub ricci: SymTensor2,
    pub scalar: f64,
    pub riemann: Option<Tensor4>,
}

/// Metric jet at a point with derived connection data.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub gamma: Tensor3,
    /// `dgamma.get(l, k, i, j) = d_l Gamma^k_ij`; only filled by [`PointGeometry::second_order`].
    pub dgamma: Option<Tensor4>,
}

fn check_point(provider: &dyn MetricProvider, x: &[f64]) -> Result<()> {
    if x.len() != provider.dim() {
        return Err(QeError::Dimension { expected: provider.dim(), got: x.len() });
    }
    if !provider.admissible(x) {
        return Err(QeError::Inadmissible(x.to_vec()));
    }
    Ok(())
}

fn invert_metric(g: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(QeError::Evaluation("metric components".into()));
    }
    let chol = Cholesky::new(g.clone()).ok_or_else(|| QeError::DegenerateMetric(x.to_vec()))?;
    let ginv = chol.inverse();
    let n = g.nrows();
    let cond = g.amax() * ginv.amax() * n as f64;
    if !cond.is_finite() || cond > 1e14 {
        return Err(QeError::DegenerateMetric(x.to_vec()));
    }
    Ok(ginv)
}

impl PointGeometry {
    /// Metric, inverse and Christoffel symbols.
    pub fn first_order(provider: &dyn MetricProvider, x: &[f64]) -> Result<Self> {
        check_point(provider, x)?;
        let g = provider.metric(x)?;
        let ginv = invert_metric(&g, x)?;
        let dg = provider.metric_d1(x)?;
        if dg.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(QeError::Evaluation("metric derivative".into()));
        }
        let n = g.nrows();
        let mut gamma = Tensor3::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    gamma.set(k, i, j, 0.5 * s);
                    gamma.set(k, j, i, 0.5 * s);
                }
            }
        }
        Ok(Self { g, ginv, dg, gamma, dgamma: None })
    }

    /// Adds `d_l Gamma^k_ij` from the second metric derivatives.
    pub fn second_order(provider: &dyn MetricProvider, x: &[f64]) -> Result<Self> {
        let mut pg = Self::first_order(provider, x)?;
        let ddg = provider.metric_d2(x)?;
        if ddg.iter().flatten().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(QeError::Evaluation("second metric derivative".into()));
        }
        let n = pg.g.nrows();
        let (ginv, dg) = (&pg.ginv, &pg.dg);
        let mut dgamma = Tensor4::zeros(n);
        for l in 0..n {
            // d_l g^{km} = -g^{ka} d_l g_ab g^{bm}
            let dginv = -(ginv * &dg[l] * ginv);
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            let lower = dg[i][(j, m)] + dg[j][(i, m)] - dg[m][(i, j)];
                            let dlower = ddg[l][i][(j, m)] + ddg[l][j][(i, m)] - ddg[l][m][(i, j)];
                            s += dginv[(k, m)] * lower + ginv[(k, m)] * dlower;
                        }
                        dgamma.set(l, k, i, j, 0.5 * s);
                        dgamma.set(l, k, j, i, 0.5 * s);
                    }
                }
            }
        }
        pg.dgamma = Some(dgamma);
        Ok(pg)
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    fn dgamma(&self) -> &Tensor4 {
        self.dgamma.as_ref().expect("second-order geometry required")
    }

    /// `R^l_ijk = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk - Gamma^l_jm Gamma^m_ik`
    fn riemann_up(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let (dgam, gam) = (self.dgamma(), &self.gamma);
        let mut s = dgam.get(i, l, j, k) - dgam.get(j, l, i, k);
        for m in 0..self.dim() {
            s += gam.get(l, i, m) * gam.get(m, j, k) - gam.get(l, j, m) * gam.get(m, i, k);
        }
        s
    }

    pub fn ricci(&self) -> SymTensor2 {
        let n = self.dim();
        SymTensor2::from_fn(n, |j, k| {
            let a = (0..n).map(|i| self.riemann_up(i, i, j, k)).sum::<f64>();
            let b = (0..n).map(|i| self.riemann_up(i, i, k, j)).sum::<f64>();
            0.5 * (a + b)
        })
    }

    /// Riemann tensor in the crate convention, `Rm[c][b][a][d]`.
    pub fn riemann(&self) -> Tensor4 {
        let n = self.dim();
        let mut up = vec![0.0; n * n * n * n];
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        up[((m * n + i) * n + j) * n + k] = self.riemann_up(m, i, j, k);
                    }
                }
            }
        }
        let mut rm = Tensor4::zeros(n);
        for c in 0..n {
            for b in 0..n {
                for a in 0..n {
                    for d in 0..n {
                        // Rm_cbad = g_dm R^m_{b c a}
                        let s: f64 = (0..n).map(|m| self.g[(d, m)] * up[((m * n + b) * n + c) * n + a]).sum();
                        rm.set(c, b, a, d, s);
                    }
                }
            }
        }
        rm
    }

    /// Covariant Hessian from a gradient and coordinate Hessian.
    pub fn covariant_hessian(&self, grad: &[f64], coord_hess: &DMatrix<f64>) -> SymTensor2 {
        let n = self.dim();
        SymTensor2::from_fn(n, |i, j| {
            let corr: f64 = (0..n).map(|k| self.gamma.get(k, i, j) * grad[k]).sum();
            coord_hess[(i, j)] - corr
        })
    }
}

pub fn christoffel(provider: &dyn MetricProvider, x: &[f64]) -> Result<Tensor3> {
    Ok(PointGeometry::first_order(provider, x)?.gamma)
}

pub fn ricci(provider: &dyn MetricProvider, x: &[f64]) -> Result<SymTensor2> {
    Ok(PointGeometry::second_order(provider, x)?.ricci())
}

pub fn scalar_curvature(provider: &dyn MetricProvider, x: &[f64]) -> Result<f64> {
    let pg = PointGeometry::second_order(provider, x)?;
    Ok(pg.ricci().trace_with(&pg.ginv))
}

pub fn curvature(provider: &dyn MetricProvider, x: &[f64], with_riemann: bool) -> Result<CurvatureBundle> {
    let pg = PointGeometry::second_order(provider, x)?;
    let ricci = pg.ricci();
    let scalar = ricci.trace_with(&pg.ginv);
    let riemann = with_riemann.then(|| pg.riemann());
    Ok(CurvatureBundle { christoffel: pg.gamma, ricci, scalar, riemann })
}

/// Covariant Hessian `d_i d_j u - Gamma^k_ij d_k u`.
pub fn hessian(provider: &dyn MetricProvider, u: &dyn ScalarField, x: &[f64]) -> Result<SymTensor2> {
    let pg = PointGeometry::first_order(provider, x)?;
    let h = pg.covariant_hessian(&u.gradient(x)?, &u.coord_hessian(x)?);
    if !h.is_finite() {
        return Err(QeError::Evaluation("hessian".into()));
    }
    Ok(h)
}

pub fn laplacian(provider: &dyn MetricProvider, u: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    let pg = PointGeometry::first_order(provider, x)?;
    Ok(pg.covariant_hessian(&u.gradient(x)?, &u.coord_hessian(x)?).trace_with(&pg.ginv))
}

/// Curvature tensor of a three-manifold rebuilt from Ricci, scalar curvature and metric:
/// `Rm_cbad = R_ca g_bd + R_bd g_ca - R_cd g_ba - R_ba g_cd - (R/2)(g_bd g_ca - g_cd g_ba)`.
pub fn riemann_from_ricci_3d(ricci: &SymTensor2, scalar: f64, metric: &SymTensor2) -> Result<Tensor4> {
    if ricci.dim() != 3 || metric.dim() != 3 {
        return Err(QeError::Dimension { expected: 3, got: ricci.dim() });
    }
    let (r, g) = (ricci, metric);
    let mut out = Tensor4::zeros(3);
    for c in 0..3 {
        for b in 0..3 {
            for a in 0..3 {
                for d in 0..3 {
                    let v = r.get(c, a) * g.get(b, d) + r.get(b, d) * g.get(c, a)
                        - r.get(c, d) * g.get(b, a)
                        - r.get(b, a) * g.get(c, d)
                        - 0.5 * scalar * (g.get(b, d) * g.get(c, a) - g.get(c, d) * g.get(b, a));
                    out.set(c, b, a, d, v);
                }
            }
        }
    }
    Ok(out)
}

/// `nabla_c R_ab` as `out.get(c, a, b)`, with a finite-difference error estimate
/// from comparing steps `h` and `2h`.
pub fn covariant_ricci_derivative(provider: &dyn MetricProvider, x: &[f64]) -> Result<(Tensor3, f64)> {
    let pg = PointGeometry::second_order(provider, x)?;
    let ric = pg.ricci();
    let n = pg.dim();
    let flat = |y: &[f64]| -> Result<Vec<f64>> { Ok(ricci(provider, y)?.into_matrix().as_slice().to_vec()) };
    let d1 = fd::jacobian_vec(flat, x, provider.fd_scale())?;
    let d2 = fd::jacobian_vec(flat, x, 2.0 * provider.fd_scale())?;
    let mut err: f64 = 0.0;
    let mut out = Tensor3::zeros(n);
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let partial = d1[c][a + b * n];
                err = err.max((partial - d2[c][a + b * n]).abs());
                let mut s = partial;
                for d in 0..n {
                    s -= pg.gamma.get(d, c, a) * ric.get(d, b) + pg.gamma.get(d, c, b) * ric.get(a, d);
                }
                out.set(c, a, b, s);
            }
        }
    }
    if !out.is_finite() {
        return Err(QeError::Evaluation("covariant Ricci derivative".into()));
    }
    let floor = 1e-13 * (1.0 + out.max_abs());
    Ok((out, err + floor))
}

/// Scalar curvature with its coordinate gradient and coordinate Hessian by
/// finite differences of the analytic value.
#[derive(Debug, Clone)]
pub struct ScalarCurvatureJet {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub coord_hessian: DMatrix<f64>,
    /// Difference between `h` and `2h` gradient stencils.
    pub gradient_error: f64,
}

pub fn scalar_curvature_jet(provider: &dyn MetricProvider, x: &[f64]) -> Result<ScalarCurvatureJet> {
    let value = scalar_curvature(provider, x)?;
    let rf = |y: &[f64]| -> Result<Vec<f64>> { Ok(vec![scalar_curvature(provider, y)?]) };
    let g1 = fd::jacobian_vec(rf, x, provider.fd_scale())?;
    let g2 = fd::jacobian_vec(rf, x, 2.0 * provider.fd_scale())?;
    let gradient: Vec<f64> = g1.iter().map(|v| v[0]).collect();
    let gradient_error = g1.iter().zip(&g2).fold(0.0_f64, |m, (a, b)| m.max((a[0] - b[0]).abs()));
    let coord_hessian = fd::hessian_from_values(|y| scalar_curvature(provider, y), x)?;
    Ok(ScalarCurvatureJet { value, gradient, coord_hessian, gradient_error })
}
