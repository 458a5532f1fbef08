//! Scalar fields on a chart, with analytic or finite-difference derivatives.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{QeError, Result};
use crate::fd;
use crate::profile::ProfileSolution;

/// A smooth function of one coordinate, evaluated with two derivatives.
#[derive(Debug, Clone)]
pub enum Factor {
    Const(f64),
    /// `e^{k x}`
    Exp(f64),
    Cosh,
    Sinh,
    Sin,
    Cos,
    /// `x` itself
    Linear,
    /// `phi(x)^2`
    Square(Box<Factor>),
    /// profile value `f(t)`
    Profile(Arc<ProfileSolution>),
    /// profile slope `f'(t)`
    ProfileSlope(Arc<ProfileSolution>),
}

impl Factor {
    pub fn square(self) -> Self {
        Factor::Square(Box::new(self))
    }

    /// `[phi, phi', phi'']` at `x`.
    pub fn eval(&self, x: f64) -> Result<[f64; 3]> {
        Ok(match self {
            Factor::Const(c) => [*c, 0.0, 0.0],
            Factor::Exp(k) => {
                let e = (k * x).exp();
                [e, k * e, k * k * e]
            }
            Factor::Cosh => [x.cosh(), x.sinh(), x.cosh()],
            Factor::Sinh => [x.sinh(), x.cosh(), x.sinh()],
            Factor::Sin => [x.sin(), x.cos(), -x.sin()],
            Factor::Cos => [x.cos(), -x.sin(), -x.cos()],
            Factor::Linear => [x, 1.0, 0.0],
            Factor::Square(inner) => {
                let [v, d, dd] = inner.eval(x)?;
                [v * v, 2.0 * v * d, 2.0 * (d * d + v * dd)]
            }
            Factor::Profile(p) => {
                let j = p.jet(x)?;
                [j[0], j[1], j[2]]
            }
            Factor::ProfileSlope(p) => {
                let j = p.jet(x)?;
                [j[1], j[2], j[3]]
            }
        })
    }
}

/// `coef * prod_j phi_j(x[axis_j])`.
#[derive(Debug, Clone)]
pub struct Monomial {
    pub coef: f64,
    pub factors: Vec<(usize, Factor)>,
}

impl Monomial {
    pub fn constant(c: f64) -> Self {
        Self { coef: c, factors: Vec::new() }
    }

    pub fn new(coef: f64, factors: Vec<(usize, Factor)>) -> Self {
        Self { coef, factors }
    }

    /// Value, gradient and coordinate Hessian.
    pub fn jet(&self, x: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        let n = x.len();
        let evals = self
            .factors
            .iter()
            .map(|(axis, f)| {
                if *axis >= n {
                    return Err(QeError::Dimension { expected: n, got: axis + 1 });
                }
                f.eval(x[*axis])
            })
            .collect::<Result<Vec<_>>>()?;
        // product over all factors except those in `skip`
        let prod_except = |skip: &[usize]| -> f64 {
            evals
                .iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .fold(self.coef, |acc, (_, e)| acc * e[0])
        };
        let value = prod_except(&[]);
        let mut grad = vec![0.0; n];
        let mut hess = DMatrix::zeros(n, n);
        for (j, (aj, _)) in self.factors.iter().enumerate() {
            grad[*aj] += evals[j][1] * prod_except(&[j]);
            for (i, (ai, _)) in self.factors.iter().enumerate() {
                let term = if i == j {
                    evals[j][2] * prod_except(&[j])
                } else {
                    evals[j][1] * evals[i][1] * prod_except(&[i, j])
                };
                hess[(*aj, *ai)] += term;
            }
        }
        Ok((value, grad, hess))
    }
}

/// A scalar field `u` on a chart.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        fd::gradient(|y| self.value(y), x)
    }

    /// Coordinate second derivatives `d_i d_j u`.
    fn coord_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        fd::hessian_from_values(|y| self.value(y), x)
    }

    /// Whether this field is meant to be positive (potential functions).
    fn positive(&self) -> bool {
        true
    }
}

/// Finite sum of separable monomials; all derivatives analytic.
#[derive(Debug, Clone)]
pub struct SeparableField {
    pub terms: Vec<Monomial>,
}

impl SeparableField {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    pub fn single(m: Monomial) -> Self {
        Self { terms: vec![m] }
    }

    pub fn constant(c: f64) -> Self {
        Self::single(Monomial::constant(c))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { terms: self.terms.iter().map(|m| Monomial { coef: m.coef * s, factors: m.factors.clone() }).collect() }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn jet(&self, x: &[f64]) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        let n = x.len();
        let mut v = 0.0;
        let mut g = vec![0.0; n];
        let mut h = DMatrix::zeros(n, n);
        for t in &self.terms {
            let (tv, tg, th) = t.jet(x)?;
            v += tv;
            for i in 0..n {
                g[i] += tg[i];
            }
            h += th;
        }
        Ok((v, g, h))
    }
}

impl ScalarField for SeparableField {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(x)?.0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(x)?.1)
    }

    fn coord_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.jet(x)?.2)
    }
}

/// Radial profiles `phi(|x|)` used by the asymptotic checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialProfile {
    /// `c r^alpha`
    Power { c: f64, alpha: f64 },
    /// `ln r`
    Log,
    /// `1 + c / r`
    OnePlusInverse { c: f64 },
}

impl RadialProfile {
    fn eval(&self, r: f64) -> [f64; 3] {
        match *self {
            RadialProfile::Power { c, alpha } => {
                let v = c * r.powf(alpha);
                [v, alpha * v / r, alpha * (alpha - 1.0) * v / (r * r)]
            }
            RadialProfile::Log => [r.ln(), 1.0 / r, -1.0 / (r * r)],
            RadialProfile::OnePlusInverse { c } => [1.0 + c / r, -c / (r * r), 2.0 * c / (r * r * r)],
        }
    }
}

/// `u(x) = phi(|x|)` on `R^n` minus the origin.
#[derive(Debug, Clone, Copy)]
pub struct RadialField(pub RadialProfile);

impl RadialField {
    fn radius(x: &[f64]) -> Result<f64> {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 {
            Ok(r)
        } else {
            Err(QeError::Inadmissible(x.to_vec()))
        }
    }
}

impl ScalarField for RadialField {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.0.eval(Self::radius(x)?)[0])
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = Self::radius(x)?;
        let d = self.0.eval(r)[1];
        Ok(x.iter().map(|xi| d * xi / r).collect())
    }

    fn coord_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let r = Self::radius(x)?;
        let [_, d, dd] = self.0.eval(r);
        let n = x.len();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let (ni, nj) = (x[i] / r, x[j] / r);
            let delta = if i == j { 1.0 } else { 0.0 };
            dd * ni * nj + d * (delta - ni * nj) / r
        }))
    }
}

/// Closure-backed field; derivatives come from finite differences.
pub struct FnField<F>(pub F);

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, x: &[f64]) -> Result<f64> {
        let v = (self.0)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QeError::Evaluation("scalar field".into()))
        }
    }
}
