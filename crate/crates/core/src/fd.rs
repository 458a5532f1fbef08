//! Central finite-difference stencils.
//!
//! Steps scale with `max(1, |x_i|)`: first derivatives use `cbrt(eps)`,
//! second derivatives from values use `eps^(1/4)`.

use nalgebra::DMatrix;

use crate::error::{QeError, Result};

pub fn step1(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

pub fn step2(x: f64) -> f64 {
    f64::EPSILON.powf(0.25) * x.abs().max(1.0)
}

fn shifted(x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += h;
    y
}

/// Central difference of a vector-valued map along each axis:
/// returns `out[i] = d/dx_i F(x)`.
pub fn jacobian_vec<F>(mut f: F, x: &[f64], scale: f64) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step1(x[i]) * scale;
        let fp = f(&shifted(x, i, h))?;
        let fm = f(&shifted(x, i, -h))?;
        let d: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        if d.iter().any(|v| !v.is_finite()) {
            return Err(QeError::Evaluation("finite-difference derivative".into()));
        }
        out.push(d);
    }
    Ok(out)
}

pub fn gradient<F>(mut f: F, x: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    Ok(jacobian_vec(|y| Ok(vec![f(y)?]), x, 1.0)?.into_iter().map(|v| v[0]).collect())
}

/// Hessian by differencing an analytic gradient, symmetrized.
pub fn hessian_from_gradient<F>(f: F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let j = jacobian_vec(f, x, 1.0)?;
    Ok(DMatrix::from_fn(n, n, |a, b| 0.5 * (j[a][b] + j[b][a])))
}

/// Hessian from values only, with the `eps^(1/4)` step.
pub fn hessian_from_values<F>(mut f: F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let f0 = f(x)?;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = step2(x[i]);
        let fp = f(&shifted(x, i, hi))?;
        let fm = f(&shifted(x, i, -hi))?;
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in (i + 1)..n {
            let hj = step2(x[j]);
            let pp = f(&shifted(&shifted(x, i, hi), j, hj))?;
            let pm = f(&shifted(&shifted(x, i, hi), j, -hj))?;
            let mp = f(&shifted(&shifted(x, i, -hi), j, hj))?;
            let mm = f(&shifted(&shifted(x, i, -hi), j, -hj))?;
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(QeError::Evaluation("finite-difference Hessian".into()));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_and_hessian_of_cubic() {
        let f = |x: &[f64]| Ok(x[0].powi(3) + x[0] * x[1]);
        let g = gradient(f, &[2.0, 1.0]).unwrap();
        assert!((g[0] - 13.0).abs() < 1e-8);
        assert!((g[1] - 2.0).abs() < 1e-9);
        let h = hessian_from_values(f, &[2.0, 1.0]).unwrap();
        assert!((h[(0, 0)] - 12.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
    }
}
