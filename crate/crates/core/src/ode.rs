//! Adaptive Dormand-Prince 5(4) stepper shared by the profile integrator and
//! the prolonged-state transport.

use crate::error::{QeError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (5th minus embedded 4th order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h_init: None, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Sum of accepted local error norms, a crude global error proxy.
    pub error_sum: f64,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` in place.
pub fn integrate<F>(mut f: F, t0: f64, y: &mut [f64], t1: f64, ctl: &StepControl) -> Result<OdeStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y.len();
    let mut stats = OdeStats::default();
    if t1 == t0 {
        return Ok(stats);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];

    f(t0, y, &mut k[0])?;
    stats.rhs_evals += 1;

    let mut h = ctl.h_init.unwrap_or_else(|| {
        let scale: f64 = y.iter().map(|v| ctl.atol + ctl.rtol * v.abs()).fold(f64::INFINITY, f64::min);
        let d1 = k[0].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let guess = if d1 > 0.0 { 0.1 * (scale / d1).max(1e-300).powf(0.2) } else { 0.01 };
        guess.clamp(1e-6, 0.1)
    });
    h = h.min(ctl.h_max).min(span);

    let mut t = t0;
    let mut fac_old: f64 = 1e-4;
    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected > ctl.max_steps {
            return Err(QeError::StepUnderflow(t));
        }
        let last = h >= (t1 - t).abs();
        let hs = if last { (t1 - t).abs() } else { h } * dir;

        stage(&k, y, &mut tmp, hs, &[A21]);
        f(t + C2 * hs, &tmp, &mut k[1])?;
        stage(&k, y, &mut tmp, hs, &[A31, A32]);
        f(t + C3 * hs, &tmp, &mut k[2])?;
        stage(&k, y, &mut tmp, hs, &[A41, A42, A43]);
        f(t + C4 * hs, &tmp, &mut k[3])?;
        stage(&k, y, &mut tmp, hs, &[A51, A52, A53, A54]);
        f(t + C5 * hs, &tmp, &mut k[4])?;
        stage(&k, y, &mut tmp, hs, &[A61, A62, A63, A64, A65]);
        f(t + hs, &tmp, &mut k[5])?;
        for i in 0..dim {
            y5[i] = y[i] + hs * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        f(t + hs, &y5, &mut k[6])?;
        stats.rhs_evals += 6;

        let mut err = 0.0_f64;
        for i in 0..dim {
            let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(y5[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / dim as f64).sqrt();
        if !err.is_finite() {
            return Err(QeError::Evaluation("ode step error estimate".into()));
        }

        if err <= 1.0 {
            stats.accepted += 1;
            stats.error_sum += err * ctl.atol.max(ctl.rtol);
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&y5);
            k.swap(0, 6);
            // PI controller
            let fac = (err.max(1e-10).powf(-0.17) * fac_old.powf(0.04) * 0.9).clamp(0.2, 5.0);
            fac_old = err.max(1e-4);
            h = (h * fac).min(ctl.h_max);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
        if h < ctl.h_min && (t1 - t).abs() > ctl.h_min {
            return Err(QeError::StepUnderflow(t));
        }
    }
    Ok(stats)
}

fn stage(k: &[Vec<f64>], y: &[f64], out: &mut [f64], h: f64, a: &[f64]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (j, aj) in a.iter().enumerate() {
            s += aj * k[j][i];
        }
        out[i] = y[i] + h * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let mut y = [1.0];
        integrate(|_, y, d| { d[0] = y[0]; Ok(()) }, 0.0, &mut y, 2.0, &StepControl::with_tol(1e-12)).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let mut y = [0.0, 1.0];
        integrate(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
                Ok(())
            },
            0.0,
            &mut y,
            -1.0,
            &StepControl::with_tol(1e-12),
        )
        .unwrap();
        assert!((y[0] - (-1f64).sin()).abs() < 1e-10);
        assert!((y[1] - (-1f64).cos()).abs() < 1e-10);
    }
}
