//! Decay fits on asymptotically flat ends and the growth bounds on `u`.
//!
//! All fits are log-log least squares of a sphere maximum against the
//! radius. Sphere maxima are taken over a deterministic direction set.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QeError, Result};
use crate::field::ScalarField;
use crate::geometry::PointGeometry;
use crate::metric::MetricProvider;
use crate::tensor::covector_norm;
use crate::verifier::{mu_at, PointData};

/// Quantities below this are treated as exactly zero.
pub const FLAT_FLOOR: f64 = 1e-13;
/// Relative slack on fitted exponents.
pub const EXPONENT_SLACK: f64 = 0.05;
/// Absolute slack on the decay chain.
pub const CHAIN_SLACK: f64 = 0.1;
pub const MIN_DIRECTIONS: usize = 64;

/// `{x : |x| > rho}` in `R^n` with a metric.
#[derive(Clone)]
pub struct EndChart {
    pub provider: Arc<dyn MetricProvider>,
    pub rho: f64,
}

impl EndChart {
    pub fn new(provider: Arc<dyn MetricProvider>, rho: f64) -> Result<Self> {
        let n = provider.dim();
        if n < 3 {
            return Err(QeError::Dimension { expected: 3, got: n });
        }
        if !(rho > 0.0) {
            return Err(QeError::Precondition("rho must be positive".into()));
        }
        Ok(Self { provider, rho })
    }

    pub fn dim(&self) -> usize {
        self.provider.dim()
    }

    /// `count` radii geometrically spaced from `2 rho` to `64 rho`.
    pub fn default_radii(&self, count: usize) -> Vec<f64> {
        geometric_radii(2.0 * self.rho, 64.0 * self.rho, count)
    }
}

pub fn geometric_radii(r0: f64, r1: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|i| r0 * (r1 / r0).powf(i as f64 / (count - 1) as f64)).collect()
}

/// At least `count` unit vectors: a Fibonacci spiral in three dimensions,
/// seeded Gaussian directions otherwise.
pub fn directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    let count = count.max(MIN_DIRECTIONS);
    if n == 3 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let rr = (1.0 - z * z).sqrt();
                let th = golden * i as f64;
                vec![rr * th.cos(), rr * th.sin(), z]
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            out.push(e);
        }
    }
    while out.len() < count {
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
                (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
            })
            .collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        out.push(v.iter().map(|a| a / norm).collect());
    }
    out
}

/// What is being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// `max |g_ij - delta_ij|`
    B,
    /// `max |d_k g_ij|`
    DB,
    /// `max |d_l d_k g_ij|`
    DDB,
    /// `max |Gamma^k_ij|`
    Gamma,
    /// `max |R_ij|`
    Ric,
    /// `u` itself (growth)
    UGrowth,
    /// `max |d_i d_j u|`
    UHessian,
}

impl Quantity {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "b" => Quantity::B,
            "db" => Quantity::DB,
            "ddb" => Quantity::DDB,
            "gamma" => Quantity::Gamma,
            "ric" => Quantity::Ric,
            "u-growth" => Quantity::UGrowth,
            "u-hessian" => Quantity::UHessian,
            other => return Err(QeError::Unknown(other.into())),
        })
    }

    fn needs_u(self) -> bool {
        matches!(self, Quantity::UGrowth | Quantity::UHessian)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

fn sample(end: &EndChart, q: Quantity, u: Option<&dyn ScalarField>, x: &[f64]) -> Result<f64> {
    let p = end.provider.as_ref();
    let n = end.dim();
    Ok(match q {
        Quantity::B => max_abs(&(p.metric(x)? - DMatrix::identity(n, n))),
        Quantity::DB => p.metric_d1(x)?.iter().map(max_abs).fold(0.0, f64::max),
        Quantity::DDB => p.metric_d2(x)?.iter().flatten().map(max_abs).fold(0.0, f64::max),
        Quantity::Gamma => PointGeometry::first_order(p, x)?.gamma.max_abs(),
        Quantity::Ric => PointGeometry::second_order(p, x)?.ricci().matrix().amax(),
        Quantity::UGrowth => u.expect("checked").value(x)?,
        Quantity::UHessian => u.expect("checked").coord_hessian(x)?.amax(),
    })
}

/// Least-squares power law `C r^slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub quantity: Quantity,
    pub slope: f64,
    /// `-slope`
    pub tau: f64,
    pub c: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecayOutcome {
    Fit(DecayFit),
    /// The quantity vanished to round-off at every radius.
    Flat { max: f64 },
}

impl DecayOutcome {
    pub fn fit(&self) -> Option<&DecayFit> {
        match self {
            DecayOutcome::Fit(f) => Some(f),
            DecayOutcome::Flat { .. } => None,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, DecayOutcome::Flat { .. })
    }
}

/// Fits `log value = log C + slope log r`.
pub fn power_law_fit(quantity: Quantity, radii: &[f64], values: &[f64]) -> Result<DecayOutcome> {
    if radii.len() < 2 || radii.len() != values.len() {
        return Err(QeError::Precondition("need matching radii and values, at least two".into()));
    }
    let vmax = values.iter().copied().fold(0.0, f64::max);
    if vmax <= FLAT_FLOOR || values.iter().any(|v| *v <= 0.0) {
        if vmax <= FLAT_FLOOR {
            return Ok(DecayOutcome::Flat { max: vmax });
        }
        return Err(QeError::Evaluation("nonpositive sample in a power-law fit".into()));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / k).sqrt();
    Ok(DecayOutcome::Fit(DecayFit {
        quantity,
        slope,
        tau: -slope,
        c: icpt.exp(),
        residual,
        radii: radii.to_vec(),
        values: values.to_vec(),
    }))
}

/// Sphere maxima of `quantity` at each radius, fitted against `r`.
pub fn fit_decay(
    end: &EndChart,
    quantity: Quantity,
    u: Option<&dyn ScalarField>,
    radii: &[f64],
    dirs: &[Vec<f64>],
) -> Result<DecayOutcome> {
    if quantity.needs_u() && u.is_none() {
        return Err(QeError::Precondition("this quantity needs a potential".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.first().is_some_and(|r| *r <= end.rho) {
        return Err(QeError::Precondition("radii must increase and exceed rho".into()));
    }
    let mut values = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut best: f64 = 0.0;
        for d in dirs {
            let x: Vec<f64> = d.iter().map(|c| c * r).collect();
            best = best.max(sample(end, quantity, u, &x)?);
        }
        values.push(best);
    }
    power_law_fit(quantity, radii, &values)
}

/// `(n-2)/2 < tau <= n-2`.
pub fn af_range_contains(tau: f64, n: usize) -> bool {
    let top = n as f64 - 2.0;
    tau > top / 2.0 && tau <= top
}

/// Range check on a fitted order, with [`EXPONENT_SLACK`] on the closed upper end.
pub fn validate_af_range(fit: &DecayFit, n: usize) -> bool {
    let top = n as f64 - 2.0;
    fit.tau > top / 2.0 && fit.tau <= top * (1.0 + EXPONENT_SLACK)
}

/// Which case of the linear-growth argument a decay order falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProofBranch {
    /// `u - Lambda = O(r^(1 - tau))`
    BelowOne,
    /// `u - Lambda = O(ln r)`
    LogCase,
    /// `u - Lambda = O(1)`; only reachable for `n >= 4`.
    AboveOne,
}

pub fn proof_branch(tau: f64, n: usize) -> Result<ProofBranch> {
    if !af_range_contains(tau, n) {
        return Err(QeError::Precondition(format!("tau = {tau} outside ((n-2)/2, n-2] for n = {n}")));
    }
    Ok(if tau < 1.0 {
        ProofBranch::BelowOne
    } else if tau == 1.0 {
        ProofBranch::LogCase
    } else {
        ProofBranch::AboveOne
    })
}

/// Slopes of `b`, `Gamma` and `Ric`, checked against `-1` and `-2` offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayChain {
    pub b: DecayOutcome,
    pub gamma: DecayOutcome,
    pub ric: DecayOutcome,
    pub gamma_ok: bool,
    pub ric_ok: bool,
    pub pass: bool,
}

pub fn decay_chain(end: &EndChart, radii: &[f64], dirs: &[Vec<f64>]) -> Result<DecayChain> {
    let b = fit_decay(end, Quantity::B, None, radii, dirs)?;
    let gamma = fit_decay(end, Quantity::Gamma, None, radii, dirs)?;
    let ric = fit_decay(end, Quantity::Ric, None, radii, dirs)?;
    let ok = |q: &DecayOutcome, offset: f64| -> bool {
        match (b.fit(), q.fit()) {
            (_, None) => true,
            (Some(fb), Some(fq)) => fq.slope <= fb.slope - offset + CHAIN_SLACK,
            (None, Some(_)) => false,
        }
    };
    let gamma_ok = ok(&gamma, 1.0);
    let ric_ok = ok(&ric, 2.0);
    Ok(DecayChain { b, gamma, ric, gamma_ok, ric_ok, pass: gamma_ok && ric_ok })
}

fn require_static_end(m: f64, lambda: f64) -> Result<()> {
    if lambda != 0.0 {
        return Err(QeError::Precondition(format!("needs lambda = 0, got {lambda}")));
    }
    if !(m > 1.0) {
        return Err(QeError::Precondition(format!("needs m > 1, got {m}")));
    }
    Ok(())
}

/// `c0 r^alpha <= sup u <= C r` with `alpha = (m-1)/(m(m+2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub exponent: f64,
    pub alpha: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub pass: bool,
    pub fit: DecayFit,
}

pub fn growth_exponent_alpha(m: f64) -> f64 {
    (m - 1.0) / (m * (m + 2.0))
}

pub fn growth_bounds_check(
    end: &EndChart,
    u: &dyn ScalarField,
    m: f64,
    lambda: f64,
    radii: &[f64],
    dirs: &[Vec<f64>],
) -> Result<GrowthReport> {
    require_static_end(m, lambda)?;
    for &r in radii {
        for d in dirs {
            let x: Vec<f64> = d.iter().map(|c| c * r).collect();
            if !(u.value(&x)? > 0.0) {
                return Err(QeError::Precondition(format!("u is not positive at {x:?}")));
            }
        }
    }
    let fit = match fit_decay(end, Quantity::UGrowth, Some(u), radii, dirs)? {
        DecayOutcome::Fit(f) => f,
        DecayOutcome::Flat { .. } => return Err(QeError::Precondition("u vanishes".into())),
    };
    let alpha = growth_exponent_alpha(m);
    let exponent = fit.slope;
    let lower_ok = exponent >= alpha * (1.0 - EXPONENT_SLACK);
    let upper_ok = exponent <= 1.0 + EXPONENT_SLACK;
    Ok(GrowthReport { exponent, alpha, lower_ok, upper_ok, pass: lower_ok && upper_ok, fit })
}

/// `sup |grad u| <= sqrt(max(mu, 0) / (m - 1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub sup_grad: f64,
    pub mu: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `mu` is measured on the grid unless `imposed_mu` is given.
pub fn gradient_bound_check(
    provider: &dyn MetricProvider,
    u: &dyn ScalarField,
    m: f64,
    lambda: f64,
    grid: &[Vec<f64>],
    imposed_mu: Option<f64>,
    tol: f64,
) -> Result<GradientReport> {
    require_static_end(m, lambda)?;
    if grid.is_empty() {
        return Err(QeError::Precondition("empty grid".into()));
    }
    let mut sup_grad: f64 = 0.0;
    let mut mu_sum = 0.0;
    for x in grid {
        let d = PointData::of(provider, u, x)?;
        sup_grad = sup_grad.max(covector_norm(&d.geometry.ginv, &d.du));
        mu_sum += mu_at(&d, m, lambda);
    }
    let mu = imposed_mu.unwrap_or(mu_sum / grid.len() as f64);
    let bound = (mu.max(0.0) / (m - 1.0)).sqrt();
    Ok(GradientReport { sup_grad, mu, bound, pass: sup_grad <= bound + tol })
}

/// Decay of the coordinate Hessian of `u`, compared with `-tau - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianDecay {
    pub outcome: DecayOutcome,
    pub target_slope: f64,
    pub pass: bool,
}

pub fn coordinate_hessian_decay(
    end: &EndChart,
    u: &dyn ScalarField,
    tau: f64,
    radii: &[f64],
    dirs: &[Vec<f64>],
) -> Result<HessianDecay> {
    let outcome = fit_decay(end, Quantity::UHessian, Some(u), radii, dirs)?;
    let target_slope = -tau - 1.0;
    let pass = match outcome.fit() {
        None => true,
        Some(f) => f.slope <= target_slope + EXPONENT_SLACK * target_slope.abs(),
    };
    Ok(HessianDecay { outcome, target_slope, pass })
}
