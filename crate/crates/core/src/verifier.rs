//! Pointwise residuals of the quasi-Einstein identities and grid sweeps.
//!
//! Identities with a `1/u` are evaluated multiplied through by `u`.
//! Tensor residuals are measured in the metric norm.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QeError, Result};
use crate::field::ScalarField;
use crate::geometry::{covariant_ricci_derivative, scalar_curvature_jet, PointGeometry};
use crate::metric::MetricProvider;
use crate::tensor::{covector_norm, raise, SymTensor2};
use crate::zoo::QEStructure;

/// Default relative gap below which Ricci eigenvalues count as equal.
pub const EIGEN_GAP_TOL: f64 = 1e-6;

/// Everything first- and second-order at one point.
pub struct PointData {
    pub geometry: PointGeometry,
    pub ricci: SymTensor2,
    pub scalar: f64,
    pub u: f64,
    pub du: Vec<f64>,
    pub hessian: SymTensor2,
}

impl PointData {
    pub fn new(s: &QEStructure, x: &[f64]) -> Result<Self> {
        Self::of(s.provider.as_ref(), s.u.as_ref(), x)
    }

    pub fn of(provider: &dyn MetricProvider, u: &dyn ScalarField, x: &[f64]) -> Result<Self> {
        let geometry = PointGeometry::second_order(provider, x)?;
        let ricci = geometry.ricci();
        let scalar = ricci.trace_with(&geometry.ginv);
        let du = u.gradient(x)?;
        let hessian = geometry.covariant_hessian(&du, &u.coord_hessian(x)?);
        Ok(Self { u: u.value(x)?, geometry, ricci, scalar, du, hessian })
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    fn g(&self) -> SymTensor2 {
        SymTensor2::from_matrix(self.geometry.g.clone())
    }

    pub fn laplacian(&self) -> f64 {
        self.hessian.trace_with(&self.geometry.ginv)
    }

    pub fn grad_norm_sq(&self) -> f64 {
        covector_norm(&self.geometry.ginv, &self.du).powi(2)
    }

    fn ric_minus_lambda(&self, lambda: f64) -> SymTensor2 {
        self.ricci.sub(&self.g().scale(lambda))
    }
}

/// `nabla^2 u - (u/m)(Ric - lambda g)`.
pub fn qe_residual(s: &QEStructure, x: &[f64]) -> Result<SymTensor2> {
    let d = PointData::new(s, x)?;
    Ok(qe_residual_at(&d, s.m, s.lambda))
}

fn qe_residual_at(d: &PointData, m: f64, lambda: f64) -> SymTensor2 {
    d.hessian.sub(&d.ric_minus_lambda(lambda).scale(d.u / m))
}

/// `1 + |u| |Ric - lambda g|`, the natural size of the equation at a point.
pub fn qe_scale(s: &QEStructure, x: &[f64]) -> Result<f64> {
    let d = PointData::new(s, x)?;
    Ok(1.0 + d.u.abs() * d.ric_minus_lambda(s.lambda).norm_with(&d.geometry.ginv))
}

/// `Delta u - (u/m)(R - n lambda)`.
pub fn trace_residual(s: &QEStructure, x: &[f64]) -> Result<f64> {
    let d = PointData::new(s, x)?;
    Ok(trace_residual_at(&d, s.m, s.lambda))
}

fn trace_residual_at(d: &PointData, m: f64, lambda: f64) -> f64 {
    d.laplacian() - d.u / m * (d.scalar - d.dim() as f64 * lambda)
}

/// `u (Ric - (R/n) g) - m (nabla^2 u - (Delta u / n) g)`.
pub fn traceless_residual(s: &QEStructure, x: &[f64]) -> Result<SymTensor2> {
    let d = PointData::new(s, x)?;
    Ok(traceless_residual_at(&d, s.m))
}

fn traceless_residual_at(d: &PointData, m: f64) -> SymTensor2 {
    let n = d.dim() as f64;
    let g = d.g();
    let ric0 = d.ricci.sub(&g.scale(d.scalar / n));
    let hess0 = d.hessian.sub(&g.scale(d.laplacian() / n));
    ric0.scale(d.u).sub(&hess0.scale(m))
}

/// `u Delta u + (m - 1)|nabla u|^2 + lambda u^2`.
pub fn mu_field(s: &QEStructure, x: &[f64]) -> Result<f64> {
    let d = PointData::new(s, x)?;
    Ok(mu_at(&d, s.m, s.lambda))
}

/// `mu` from precomputed point data.
pub fn mu_at(d: &PointData, m: f64, lambda: f64) -> f64 {
    d.u * d.laplacian() + (m - 1.0) * d.grad_norm_sq() + lambda * d.u * d.u
}

/// A residual with the finite-difference noise expected on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyResidual {
    pub value: f64,
    pub noise: f64,
}

fn require_dim3plus(n: usize) -> Result<()> {
    if n >= 3 {
        Ok(())
    } else {
        Err(QeError::Dimension { expected: 3, got: n })
    }
}

/// Norm of `(u/2) dR + (m-1) Ric(grad u) + (R - (n-1) lambda) du`.
pub fn grad_r_identity_residual(s: &QEStructure, x: &[f64]) -> Result<NoisyResidual> {
    require_dim3plus(s.dim())?;
    let d = PointData::new(s, x)?;
    let jet = scalar_curvature_jet(s.provider.as_ref(), x)?;
    let n = d.dim();
    let up = raise(&d.geometry.ginv, &d.du);
    let c = d.scalar - (n as f64 - 1.0) * s.lambda;
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let ric_du: f64 = (0..n).map(|j| d.ricci.get(i, j) * up[j]).sum();
            0.5 * d.u * jet.gradient[i] + (s.m - 1.0) * ric_du + c * d.du[i]
        })
        .collect();
    let noise = 0.5 * d.u.abs() * jet.gradient_error * (n as f64).sqrt() * d.geometry.ginv.amax().sqrt();
    Ok(NoisyResidual { value: covector_norm(&d.geometry.ginv, &w), noise })
}

/// `u` times `(1/2) Delta R + ((m+2)/(2u)) <grad u, grad R> + ((m-1)/m)|Ric0|^2
///  + ((n+m-1)/(m n)) (R - n lambda)(R - n(n-1) lambda/(m+n-1))`.
pub fn lap_r_identity_residual(s: &QEStructure, x: &[f64]) -> Result<NoisyResidual> {
    require_dim3plus(s.dim())?;
    let d = PointData::new(s, x)?;
    if !(d.u > 0.0) {
        return Err(QeError::Precondition("u must be positive".into()));
    }
    let jet = scalar_curvature_jet(s.provider.as_ref(), x)?;
    let n = d.dim();
    let nf = n as f64;
    let (m, lambda, r) = (s.m, s.lambda, d.scalar);
    let ginv = &d.geometry.ginv;
    let mut lap_r = 0.0;
    for i in 0..n {
        for j in 0..n {
            let corr: f64 = (0..n).map(|k| d.geometry.gamma.get(k, i, j) * jet.gradient[k]).sum();
            lap_r += ginv[(i, j)] * (jet.coord_hessian[(i, j)] - corr);
        }
    }
    let up = raise(ginv, &d.du);
    let du_dr: f64 = (0..n).map(|i| up[i] * jet.gradient[i]).sum();
    let ric0 = d.ricci.sub(&d.g().scale(r / nf)).norm_with(ginv);
    let poly = (nf + m - 1.0) / (m * nf) * (r - nf * lambda) * (r - nf * (nf - 1.0) * lambda / (m + nf - 1.0));
    let value = 0.5 * d.u * lap_r + 0.5 * (m + 2.0) * du_dr + d.u * ((m - 1.0) / m * ric0 * ric0 + poly);
    // eps^(1/2) relative error of the value-based Hessian of R
    let noise = d.u.abs() * (1e-7 * (1.0 + r.abs()) * ginv.amax() * nf) + 0.5 * (m + 2.0) * jet.gradient_error * up.iter().map(|v| v.abs()).sum::<f64>();
    Ok(NoisyResidual { value: value.abs(), noise })
}

/// How many Ricci eigenvalues coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Degeneracy {
    Distinct,
    /// Two coincide; `single` is the index of the remaining one.
    TwoEqual { single: usize },
    AllEqual,
}

/// Ricci eigenvalues in descending order with a `g`-orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenFrame {
    pub eigenvalues: Vec<f64>,
    /// `frame[i]` are the coordinate components of `e_i`.
    pub frame: Vec<Vec<f64>>,
    pub degeneracy: Degeneracy,
    /// Smallest gap between consecutive eigenvalues, divided by `1 + max |lambda_i|`.
    pub min_relative_gap: f64,
    pub gap_tol: f64,
}

/// Eigen-decomposition of `ric` relative to `g`.
pub fn eigenframe_of(ric: &SymTensor2, g: &DMatrix<f64>, gap_tol: f64) -> Result<EigenFrame> {
    let n = g.nrows();
    let chol = Cholesky::new(g.clone()).ok_or_else(|| QeError::DegenerateMetric(Vec::new()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| QeError::DegenerateMetric(Vec::new()))?;
    let a = &linv * ric.matrix() * linv.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let back = linv.transpose() * &eig.eigenvectors;
    let frame: Vec<Vec<f64>> = order.iter().map(|&i| back.column(i).iter().copied().collect()).collect();
    let scale = 1.0 + eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gaps: Vec<f64> = eigenvalues.windows(2).map(|w| (w[0] - w[1]) / scale).collect();
    let min_relative_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let equal: Vec<bool> = gaps.iter().map(|&gp| gp <= gap_tol).collect();
    let degeneracy = match (n, equal.as_slice()) {
        (3, [true, true]) => Degeneracy::AllEqual,
        (3, [true, false]) => Degeneracy::TwoEqual { single: 2 },
        (3, [false, true]) => Degeneracy::TwoEqual { single: 0 },
        (_, eq) if !eq.is_empty() && eq.iter().all(|&e| e) => Degeneracy::AllEqual,
        _ => Degeneracy::Distinct,
    };
    Ok(EigenFrame { eigenvalues, frame, degeneracy, min_relative_gap, gap_tol })
}

pub fn eigenframe(s: &QEStructure, x: &[f64], gap_tol: f64) -> Result<EigenFrame> {
    let pg = PointGeometry::second_order(s.provider.as_ref(), x)?;
    eigenframe_of(&pg.ricci(), &pg.g, gap_tol)
}

/// The three frame identities relating `nabla Ric` to `du`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Residuals {
    pub residuals: [f64; 3],
    pub noise: f64,
    /// Set when two distinct eigenvalues are close enough that the frame is unstable.
    pub ill_conditioned: bool,
    pub frame: EigenFrame,
}

impl Lemma1Residuals {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn lemma1_residuals(s: &QEStructure, x: &[f64]) -> Result<Lemma1Residuals> {
    if s.dim() != 3 {
        return Err(QeError::Dimension { expected: 3, got: s.dim() });
    }
    let d = PointData::new(s, x)?;
    let frame = eigenframe_of(&d.ricci, &d.geometry.g, EIGEN_GAP_TOL)?;
    let (dric, err) = covariant_ricci_derivative(s.provider.as_ref(), x)?;
    let e = &frame.frame;
    // (nabla_{e_i} Ric)(e_j, e_k)
    let nab = |i: usize, j: usize, k: usize| -> f64 {
        let mut acc = 0.0;
        for c in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    acc += dric.get(c, a, b) * e[i][c] * e[j][a] * e[k][b];
                }
            }
        }
        acc
    };
    let du_e = |i: usize| -> f64 { (0..3).map(|c| d.du[c] * e[i][c]).sum() };
    let rr = &frame.eigenvalues;
    let one = |i: usize, j: usize, k: usize| -> f64 {
        d.u * (nab(j, j, i) - nab(i, j, j) + nab(i, k, k) - nab(k, k, i)) - (s.m + 1.0) * (rr[j] - rr[k]) * du_e(i)
    };
    let residuals = [one(0, 1, 2), one(1, 0, 2), one(2, 0, 1)];
    let frame_size = e.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let noise = 4.0 * d.u.abs() * err * 27.0 * frame_size.powi(3);
    let ill_conditioned = frame.min_relative_gap > frame.gap_tol && frame.min_relative_gap < 1e-4;
    Ok(Lemma1Residuals { residuals, noise, ill_conditioned, frame })
}

/// Value, coordinate gradient and covariant Hessian of `Z = u2 / u1`.
pub fn quotient_jet(
    pg: &PointGeometry,
    u1: &dyn ScalarField,
    u2: &dyn ScalarField,
    x: &[f64],
) -> Result<(f64, Vec<f64>, SymTensor2)> {
    let (a, da, ha) = (u1.value(x)?, u1.gradient(x)?, u1.coord_hessian(x)?);
    if !(a > 0.0) {
        return Err(QeError::Precondition("u1 must be positive".into()));
    }
    let (b, db, hb) = (u2.value(x)?, u2.gradient(x)?, u2.coord_hessian(x)?);
    let n = x.len();
    let z = b / a;
    let dz: Vec<f64> = (0..n).map(|i| (db[i] - z * da[i]) / a).collect();
    let coord = DMatrix::from_fn(n, n, |i, j| (hb[(i, j)] - z * ha[(i, j)] - da[i] * dz[j] - da[j] * dz[i]) / a);
    Ok((z, dz.clone(), pg.covariant_hessian(&dz, &coord)))
}

/// `u1 nabla^2 Z(v, w) + <grad u1, v><grad Z, w> + <grad u1, w><grad Z, v>` for `Z = u2/u1`.
pub fn quotient_equation_residual(
    provider: &dyn MetricProvider,
    u1: &dyn ScalarField,
    u2: &dyn ScalarField,
    x: &[f64],
    v: &[f64],
    w: &[f64],
) -> Result<f64> {
    let pg = PointGeometry::first_order(provider, x)?;
    let (_, dz, hz) = quotient_jet(&pg, u1, u2, x)?;
    let du = u1.gradient(x)?;
    let pair = |c: &[f64], y: &[f64]| -> f64 { c.iter().zip(y).map(|(a, b)| a * b).sum() };
    Ok(u1.value(x)? * hz.apply(v, w) + pair(&du, v) * pair(&dz, w) + pair(&du, w) * pair(&dz, v))
}

/// Grid-aggregated residual of one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity: String,
    pub residuals: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub tolerance: f64,
    /// Points where evaluation itself failed.
    pub failed_points: usize,
    /// Points flagged as ill-conditioned; reported, not suppressed.
    pub flagged_points: usize,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(identity: impl Into<String>, tolerance: f64) -> Self {
        Self {
            identity: identity.into(),
            residuals: Vec::new(),
            max: 0.0,
            mean: 0.0,
            tolerance,
            failed_points: 0,
            flagged_points: 0,
            pass: true,
        }
    }

    pub fn push(&mut self, r: f64) {
        let r = r.abs();
        self.residuals.push(r);
        self.refresh();
    }

    pub fn push_failure(&mut self) {
        self.failed_points += 1;
        self.refresh();
    }

    fn refresh(&mut self) {
        let k = self.residuals.len();
        self.max = self.residuals.iter().copied().fold(0.0, f64::max);
        self.mean = if k == 0 { 0.0 } else { self.residuals.iter().sum::<f64>() / k as f64 };
        let bad = self.residuals.iter().any(|r| !r.is_finite());
        self.pass = !bad && self.failed_points == 0 && self.max <= self.tolerance;
    }

    /// Concatenates another sweep of the same identity.
    pub fn merge(mut self, other: ResidualReport) -> Self {
        self.residuals.extend(other.residuals);
        self.failed_points += other.failed_points;
        self.flagged_points += other.flagged_points;
        self.tolerance = self.tolerance.min(other.tolerance);
        self.refresh();
        self
    }

    /// Evaluates `f` at every point.
    pub fn sweep<F>(identity: &str, tolerance: f64, points: &[Vec<f64>], mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        let mut r = Self::new(identity, tolerance);
        for p in points {
            match f(p) {
                Ok(v) => r.residuals.push(v.abs()),
                Err(_) => r.failed_points += 1,
            }
        }
        r.refresh();
        r
    }
}

/// Tolerances of a full verification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative: residual / (1 + |u| |Ric - lambda g|).
    pub qe: f64,
    pub mu: f64,
    pub grad_r: f64,
    pub lap_r: f64,
    pub lemma1: f64,
    pub quotient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { qe: 1e-8, mu: 1e-8, grad_r: 1e-5, lap_r: 1e-4, lemma1: 1e-4, quotient: 1e-7 }
    }
}

impl Tolerances {
    /// Loosened bounds for providers without analytic metric derivatives.
    pub fn fd_fallback() -> Self {
        Self { qe: 1e-5, mu: 1e-5, ..Self::default() }
    }
}

/// Mean and standard deviation of `mu` over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuStats {
    pub mean: f64,
    pub stddev: f64,
    /// `stddev / (1 + |mean|)`
    pub spread: f64,
    pub expected: Option<f64>,
}

pub fn mu_stats(s: &QEStructure, points: &[Vec<f64>]) -> Result<MuStats> {
    let vals = points.iter().map(|p| mu_field(s, p)).collect::<Result<Vec<_>>>()?;
    let k = vals.len().max(1) as f64;
    let mean = vals.iter().sum::<f64>() / k;
    let stddev = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k).sqrt();
    Ok(MuStats { mean, stddev, spread: stddev / (1.0 + mean.abs()), expected: s.mu_expected })
}

/// Runs every applicable identity over the `count^n` grid of the structure's domain.
pub fn verify_structure(s: &QEStructure, count: usize, tol: &Tolerances, seed: u64) -> Vec<ResidualReport> {
    let points = s.domain.grid(count);
    let n = s.dim();
    let mut out = Vec::new();
    out.push(ResidualReport::sweep("qe", tol.qe, &points, |x| {
        let d = PointData::new(s, x)?;
        let scale = 1.0 + d.u.abs() * d.ric_minus_lambda(s.lambda).norm_with(&d.geometry.ginv);
        Ok(qe_residual_at(&d, s.m, s.lambda).norm_with(&d.geometry.ginv) / scale)
    }));
    out.push(ResidualReport::sweep("trace", tol.qe, &points, |x| {
        let d = PointData::new(s, x)?;
        let scale = 1.0 + d.u.abs() * d.ric_minus_lambda(s.lambda).norm_with(&d.geometry.ginv);
        Ok(trace_residual_at(&d, s.m, s.lambda) / scale)
    }));
    out.push(ResidualReport::sweep("traceless", tol.qe, &points, |x| {
        let d = PointData::new(s, x)?;
        let scale = 1.0 + d.u.abs() * d.ric_minus_lambda(s.lambda).norm_with(&d.geometry.ginv);
        Ok(traceless_residual_at(&d, s.m).norm_with(&d.geometry.ginv) / (s.m * scale))
    }));
    let mut mu = ResidualReport::new("mu", tol.mu);
    match mu_stats(s, &points) {
        Ok(st) => {
            mu.push(st.spread);
            if let Some(e) = st.expected {
                mu.push((st.mean - e) / (1.0 + e.abs()));
            }
        }
        Err(_) => mu.push_failure(),
    }
    out.push(mu);
    if n >= 3 {
        out.push(ResidualReport::sweep("grad-r", tol.grad_r, &points, |x| Ok(grad_r_identity_residual(s, x)?.value)));
        out.push(ResidualReport::sweep("lap-r", tol.lap_r, &points, |x| Ok(lap_r_identity_residual(s, x)?.value)));
    }
    if n == 3 {
        let mut flagged = 0;
        let mut r = ResidualReport::sweep("lemma1", tol.lemma1, &points, |x| {
            let l = lemma1_residuals(s, x)?;
            flagged += l.ill_conditioned as usize;
            Ok(l.max_abs())
        });
        r.flagged_points = flagged;
        out.push(r);
    }
    if s.known_solutions.len() >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = ResidualReport::new("quotient", tol.quotient);
        for x in &points {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for u2 in &s.known_solutions[1..] {
                match quotient_equation_residual(s.provider.as_ref(), s.u.as_ref(), u2.as_ref(), x, &v, &w) {
                    Ok(val) => {
                        // relative to the size of the terms
                        let size = quotient_term_size(s, u2.as_ref(), x, &v, &w).unwrap_or(1.0);
                        r.residuals.push(val.abs() / (1.0 + size));
                    }
                    Err(_) => r.failed_points += 1,
                }
            }
        }
        r.refresh();
        out.push(r);
    }
    out
}

fn quotient_term_size(s: &QEStructure, u2: &dyn ScalarField, x: &[f64], v: &[f64], w: &[f64]) -> Result<f64> {
    let pg = PointGeometry::first_order(s.provider.as_ref(), x)?;
    let (_, dz, hz) = quotient_jet(&pg, s.u.as_ref(), u2, x)?;
    let du = s.u.gradient(x)?;
    let pair = |c: &[f64], y: &[f64]| -> f64 { c.iter().zip(y).map(|(a, b)| a * b).sum() };
    Ok((s.u.value(x)? * hz.apply(v, w)).abs() + (pair(&du, v) * pair(&dz, w)).abs() + (pair(&du, w) * pair(&dz, v)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build, Params};

    #[test]
    fn euclid_is_exact() {
        let s = build("euclid3", &Params::default()).unwrap();
        let x = [0.3, -1.0, 2.0];
        assert_eq!(qe_residual(&s, &x).unwrap().matrix().amax(), 0.0);
        assert_eq!(trace_residual(&s, &x).unwrap(), 0.0);
        assert_eq!(lap_r_identity_residual(&s, &x).unwrap().value, 0.0);
    }

    #[test]
    fn synthetic_eigenframe() {
        let ric = SymTensor2::from_fn(3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let f = eigenframe_of(&ric, &DMatrix::identity(3, 3), EIGEN_GAP_TOL).unwrap();
        assert_eq!(f.degeneracy, Degeneracy::Distinct);
        assert_eq!(f.eigenvalues, vec![3.0, 2.0, 1.0]);
        assert!((f.frame[0][2].abs() - 1.0).abs() < 1e-14);
        let ric = SymTensor2::from_fn(3, |i, j| if i == j { [2.0, 2.0, 5.0][i] } else { 0.0 });
        let f = eigenframe_of(&ric, &DMatrix::identity(3, 3), EIGEN_GAP_TOL).unwrap();
        assert_eq!(f.degeneracy, Degeneracy::TwoEqual { single: 0 });
    }

    #[test]
    fn perturbed_solution_residual_scales_with_eps() {
        use crate::field::FnField;
        let mut s = build("table1-line-exp", &Params::default()).unwrap();
        let eps = 1e-3;
        s.u = std::sync::Arc::new(FnField(move |x: &[f64]| x[0].exp() * (1.0 + eps * x[0].sin())));
        let r = qe_residual(&s, &[0.0]).unwrap().matrix().amax();
        // (e^r eps sin r)'' - (e^r eps sin r) = 2 eps e^r cos r = 2 eps at r = 0
        assert!((r - 2.0 * eps).abs() < 1e-6, "{r}");
    }
}
