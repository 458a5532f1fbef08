//! Warping profiles `f` solving `f'^2 = P(f)`.
//!
//! Every profile family used by the zoo has
//! `P(f) = alpha + gamma f^2 + beta f^(-k)`, so the right side and all the
//! derivatives needed downstream are closed form. The profile is integrated
//! through the second-order form `f'' = P'(f) / 2`; the first-order relation
//! is only monitored.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{QeError, Result};
use crate::field::Factor;
use crate::ode::{self, StepControl};

/// Spacing of the exported grid.
pub const GRID_STEP: f64 = 0.01;

/// Sign choice for family (d): `mu = s (p - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuSign {
    Neg,
    Zero,
    Pos,
}

impl MuSign {
    pub fn factor(self) -> f64 {
        match self {
            MuSign::Neg => -1.0,
            MuSign::Zero => 0.0,
            MuSign::Pos => 1.0,
        }
    }
}

/// Families of two-dimensional warping profiles, parametrized by `p = m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ProfileFamily {
    /// `f'^2 = 1 - f^(1-p)`, `f(0) = 1`, `lambda = 0`.
    A { p: f64 },
    /// `f = e^x`, `lambda = -(p+1)`.
    B { p: f64 },
    /// `f'^2 = -1 + f^2 + 2 (p-1)^(p-1) / (p+1)^(p+1) f^(1-p)`, `f(0) = 1`, `f' > 0`.
    C { p: f64 },
    /// `f'^2 = mu/(p-1) + f^2 - (a^(p+1) + mu/(p-1) a^(p-1)) f^(1-p)`, `f(0) = a`.
    D { p: f64, a: f64, mu: MuSign },
}

impl ProfileFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            ProfileFamily::A { .. } => "a",
            ProfileFamily::B { .. } => "b",
            ProfileFamily::C { .. } => "c",
            ProfileFamily::D { .. } => "d",
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            ProfileFamily::A { p } | ProfileFamily::B { p } | ProfileFamily::C { p } | ProfileFamily::D { p, .. } => p,
        }
    }

    /// Integrability constant of the base surface.
    pub fn mu(&self) -> f64 {
        let p = self.p();
        match *self {
            ProfileFamily::A { .. } => p - 1.0,
            ProfileFamily::B { .. } => 0.0,
            ProfileFamily::C { .. } => 1.0 - p,
            ProfileFamily::D { mu, .. } => mu.factor() * (p - 1.0),
        }
    }

    /// Einstein constant `lambda` of the family.
    pub fn lambda(&self) -> f64 {
        match self {
            ProfileFamily::A { .. } => 0.0,
            _ => -(self.p() + 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 1.0) {
            return Err(QeError::Constraint(format!("p = {p} must exceed 1")));
        }
        if let ProfileFamily::D { a, mu, .. } = *self {
            let mu_v = mu.factor() * (p - 1.0);
            let a_min = if mu_v < 0.0 { (-mu_v / (p + 1.0)).sqrt() } else { 0.0 };
            if !(a > a_min) {
                return Err(QeError::Constraint(format!("a = {a} must exceed {a_min}")));
            }
        }
        Ok(())
    }

    /// The first-order ODE for this family. Family (b) is `f'^2 = f^2`.
    pub fn ode(&self) -> Result<ProfileOde> {
        self.validate()?;
        let p = self.p();
        let k = p - 1.0;
        let (rhs, f0, sign0) = match *self {
            ProfileFamily::A { .. } => (PowerLawRhs { alpha: 1.0, gamma: 0.0, beta: -1.0, k }, 1.0, 0),
            ProfileFamily::B { .. } => (PowerLawRhs { alpha: 0.0, gamma: 1.0, beta: 0.0, k }, 1.0, 1),
            ProfileFamily::C { .. } => {
                let beta = 2.0 * (p - 1.0).powf(p - 1.0) / (p + 1.0).powf(p + 1.0);
                (PowerLawRhs { alpha: -1.0, gamma: 1.0, beta, k }, 1.0, 1)
            }
            ProfileFamily::D { a, .. } => {
                let c = self.mu() / (p - 1.0);
                let beta = -(a.powf(p + 1.0) + c * a.powf(p - 1.0));
                (PowerLawRhs { alpha: c, gamma: 1.0, beta, k }, a, 0)
            }
        };
        Ok(ProfileOde { rhs, f0, sign0, family: Some(*self) })
    }

    /// Angular stretch `b` of the polar chart for (a) and (d): the metric is
    /// `dt^2 + b^2 f'^2 dtheta^2`. `None` for the Cartesian families.
    pub fn angular_scale(&self) -> Option<f64> {
        let p = self.p();
        match *self {
            ProfileFamily::A { .. } => Some(2.0 / (p - 1.0)),
            ProfileFamily::D { a, .. } => Some(1.0 / ((p + 1.0) * a / 2.0 + self.mu() / (2.0 * a))),
            _ => None,
        }
    }
}

/// Integrability constant by family tag, for the tags that appear in the listings.
pub fn mu_of_family(tag: &str, p: f64) -> Result<f64> {
    match tag {
        "a" => Ok(p - 1.0),
        "b" => Ok(0.0),
        "c" | "d" => Ok(1.0 - p),
        "d-zero" => Ok(0.0),
        "d-pos" => Ok(p - 1.0),
        other => Err(QeError::Unknown(other.to_string())),
    }
}

/// `P(f) = alpha + gamma f^2 + beta f^(-k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawRhs {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub k: f64,
}

impl PowerLawRhs {
    pub fn p(&self, f: f64) -> f64 {
        self.alpha + self.gamma * f * f + self.beta * f.powf(-self.k)
    }

    pub fn dp(&self, f: f64) -> f64 {
        2.0 * self.gamma * f - self.k * self.beta * f.powf(-self.k - 1.0)
    }

    pub fn ddp(&self, f: f64) -> f64 {
        2.0 * self.gamma + self.k * (self.k + 1.0) * self.beta * f.powf(-self.k - 2.0)
    }
}

/// `f'^2 = P(f)` with a starting value and the initial sign of `f'`
/// (`0` for a turning-point start where `P(f0) = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOde {
    pub rhs: PowerLawRhs,
    pub f0: f64,
    pub sign0: i8,
    pub family: Option<ProfileFamily>,
}

/// A profile sampled on a uniform grid, with quintic Hermite interpolation
/// on `(f, f', f'')` in between.
#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub ode: ProfileOde,
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
    pub first_integral_residual: f64,
    pub interpolation_order: usize,
}

/// Integrates the profile on `[0, t_max]`, keeping `max |f'^2 - P(f)| <= tol`.
pub fn integrate_profile(ode: &ProfileOde, t_max: f64, tol: f64) -> Result<ProfileSolution> {
    if !(t_max > 0.0) || !(tol > 0.0) {
        return Err(QeError::Precondition("t_max and tol must be positive".into()));
    }
    let rhs = ode.rhs;
    let p0 = rhs.p(ode.f0);
    let scale0 = 1.0 + ode.f0 * ode.f0;
    if p0 < -1e-13 * scale0 || !(ode.f0 > 0.0) {
        return Err(QeError::Constraint(format!("P(f0) = {p0} < 0 or f0 <= 0")));
    }
    let fp0 = if ode.sign0 == 0 || p0 <= 1e-13 * scale0 {
        if rhs.dp(ode.f0) <= 0.0 {
            return Err(QeError::Constraint("turning-point start with P'(f0) <= 0 has no escape direction".into()));
        }
        0.0
    } else {
        f64::from(ode.sign0.signum()) * p0.sqrt()
    };

    let nodes = (t_max / GRID_STEP).ceil() as usize;
    let mut grid = Vec::with_capacity(nodes + 1);
    let mut f = Vec::with_capacity(nodes + 1);
    let mut fp = Vec::with_capacity(nodes + 1);
    let mut fpp = Vec::with_capacity(nodes + 1);

    let inner_tol = (tol * 1e-4).max(1e-15);
    let ctl = StepControl { rtol: inner_tol, atol: inner_tol, h_init: Some(GRID_STEP / 4.0), h_max: GRID_STEP, ..StepControl::with_tol(inner_tol) };
    let mut y = [ode.f0, fp0];
    let mut residual: f64 = 0.0;
    for i in 0..=nodes {
        let t = i as f64 * GRID_STEP;
        if i > 0 {
            let t_prev = (i - 1) as f64 * GRID_STEP;
            ode::integrate(
                |_, y, d| {
                    if !(y[0] > 0.0) {
                        return Err(QeError::Evaluation("profile left positivity".into()));
                    }
                    d[0] = y[1];
                    d[1] = 0.5 * rhs.dp(y[0]);
                    Ok(())
                },
                t_prev,
                &mut y,
                t,
                &ctl,
            )?;
        }
        if !(y[0] > 0.0) {
            return Err(QeError::Evaluation("profile left positivity".into()));
        }
        residual = residual.max((y[1] * y[1] - rhs.p(y[0])).abs());
        grid.push(t);
        f.push(y[0]);
        fp.push(y[1]);
        fpp.push(0.5 * rhs.dp(y[0]));
    }
    Ok(ProfileSolution { ode: *ode, grid, f, fp, fpp, first_integral_residual: residual, interpolation_order: 5 })
}

impl ProfileSolution {
    pub fn t_max(&self) -> f64 {
        *self.grid.last().unwrap_or(&0.0)
    }

    /// Quintic Hermite value and derivative of `f` at `t`.
    pub fn interpolate(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0 && t <= self.t_max()) {
            return Err(QeError::Inadmissible(vec![t]));
        }
        let i = ((t / GRID_STEP).floor() as usize).min(self.grid.len() - 2);
        let h = GRID_STEP;
        let s = (t - self.grid[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
        let h3 = 0.5 * s3 - s4 + 0.5 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
        let d3 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
        let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
        let (y0, y1) = (self.f[i], self.f[i + 1]);
        let (p0, p1) = (self.fp[i], self.fp[i + 1]);
        let (q0, q1) = (self.fpp[i], self.fpp[i + 1]);
        let val = h0 * y0 + h * h1 * p0 + h * h * h2 * q0 + h5 * y1 + h * h4 * p1 + h * h * h3 * q1;
        let der = (d0 * y0 + h * d1 * p0 + h * h * d2 * q0 + d5 * y1 + h * d4 * p1 + h * h * d3 * q1) / h;
        Ok((val, der))
    }

    /// `(f, f', f'', f''')` at `t`. Derivatives are taken along the exact
    /// solution through the interpolated value, so the jet satisfies the
    /// profile ODE to round-off.
    pub fn jet(&self, t: f64) -> Result<[f64; 4]> {
        let (f, d_interp) = self.interpolate(t)?;
        let rhs = self.ode.rhs;
        let pf = rhs.p(f);
        let f1 = if pf > 1e-6 * (1.0 + f * f) { pf.sqrt().copysign(d_interp) } else { d_interp };
        let f2 = 0.5 * rhs.dp(f);
        let f3 = 0.5 * rhs.ddp(f) * f1;
        Ok([f, f1, f2, f3])
    }

    /// CSV dump with columns `t,f,fp,fpp,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f,fp,fpp,residual\n");
        for i in 0..self.grid.len() {
            let r = self.fp[i] * self.fp[i] - self.ode.rhs.p(self.f[i]);
            let _ = writeln!(out, "{:.4},{:.17e},{:.17e},{:.17e},{:.3e}", self.grid[i], self.f[i], self.fp[i], self.fpp[i], r);
        }
        out
    }
}

/// Fiber solutions `v(r)` on the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberKind {
    Exp,
    Cosh,
    Const,
}

impl FiberKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(FiberKind::Exp),
            "cosh" => Ok(FiberKind::Cosh),
            "const" => Ok(FiberKind::Const),
            other => Err(QeError::Unknown(other.into())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FiberKind::Exp => "exp",
            FiberKind::Cosh => "cosh",
            FiberKind::Const => "const",
        }
    }
}

/// `v(r) = scale * {e^r, cosh r, 1}` as a one-variable factor.
pub fn fiber_solution(kind: FiberKind, scale: f64) -> (f64, Factor) {
    let factor = match kind {
        FiberKind::Exp => Factor::Exp(1.0),
        FiberKind::Cosh => Factor::Cosh,
        FiberKind::Const => Factor::Const(1.0),
    };
    (scale, factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosh_ode() -> ProfileOde {
        ProfileFamily::D { p: 3.0, a: 1.0, mu: MuSign::Neg }.ode().unwrap()
    }

    #[test]
    fn cosh_special_case() {
        let ode = cosh_ode();
        assert_eq!(ode.rhs.p(2.0), 3.0);
        let sol = integrate_profile(&ode, 3.0, 1e-9).unwrap();
        let (f1, _) = sol.interpolate(1.0).unwrap();
        assert!((f1 - 1.5430806348152437).abs() < 1e-9, "{f1}");
        assert!(sol.first_integral_residual <= 1e-9);
        for t in [0.137, 0.5, 1.234, 2.999] {
            let j = sol.jet(t).unwrap();
            assert!((j[0] - t.cosh()).abs() < 1e-9);
            assert!((j[1] - t.sinh()).abs() < 1e-8);
        }
    }

    #[test]
    fn family_c_initial_slope() {
        let ode = ProfileFamily::C { p: 3.0 }.ode().unwrap();
        let sol = integrate_profile(&ode, 0.5, 1e-9).unwrap();
        assert!((sol.fp[0] - (1.0f64 / 32.0).sqrt()).abs() < 1e-15);
        assert!((sol.fp[0] - 0.17677670).abs() < 1e-8);
    }

    #[test]
    fn mu_values() {
        assert_eq!(mu_of_family("c", 3.0).unwrap(), -2.0);
        assert_eq!(mu_of_family("b", 7.0).unwrap(), 0.0);
        assert_eq!(mu_of_family("a", 3.0).unwrap(), 2.0);
        assert!(mu_of_family("q", 3.0).is_err());
    }

    #[test]
    fn besse_a_slope_bounded() {
        let ode = ProfileFamily::A { p: 3.0 }.ode().unwrap();
        let sol = integrate_profile(&ode, 3.0, 1e-9).unwrap();
        assert!(sol.fp.iter().all(|&d| (0.0..1.0).contains(&d)));
        assert!(sol.fp.windows(2).all(|w| w[1] >= w[0]));
        assert!(sol.first_integral_residual <= 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ProfileFamily::D { p: 3.0, a: 0.5, mu: MuSign::Neg }.ode().is_err());
        assert!(ProfileFamily::C { p: 1.0 }.ode().is_err());
        let bad = ProfileOde { rhs: PowerLawRhs { alpha: 0.0, gamma: -1.0, beta: 0.0, k: 1.0 }, f0: 1.0, sign0: 0, family: None };
        assert!(integrate_profile(&bad, 1.0, 1e-9).is_err());
    }

    #[test]
    fn fiber_solutions() {
        let (c, v) = fiber_solution(FiberKind::Exp, 1.0);
        assert!((c * v.eval(1.0).unwrap()[0] - std::f64::consts::E).abs() < 1e-15);
        let (_, v) = fiber_solution(FiberKind::Cosh, 1.0);
        let j = v.eval(0.0).unwrap();
        assert_eq!((j[0], j[1]), (1.0, 0.0));
        let (c, v) = fiber_solution(FiberKind::Const, 2.0);
        assert_eq!(c * v.eval(0.3).unwrap()[0], 2.0);
    }
}
