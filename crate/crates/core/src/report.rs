//! Batch commands and their JSON reports.
//!
//! Every command takes a [`RunConfig`] and returns a [`Report`]. Reports are
//! deterministic for a fixed config and seed except for `wall_time_s`.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    af_range_contains, coordinate_hessian_decay, decay_chain, directions, fit_decay, growth_bounds_check,
    proof_branch, validate_af_range, DecayChain, DecayOutcome, EndChart, GrowthReport, HessianDecay, ProofBranch,
    Quantity,
};
use crate::error::{QeError, Result};
use crate::field::{RadialField, RadialProfile, ScalarField};
use crate::metric::{ConformalFactor, ConformallyFlat, Domain};
use crate::solution_space::{estimate_dimension_for, DimOptions, SolutionSpaceEstimate};
use crate::verifier::{mu_stats, verify_structure, MuStats, ResidualReport, Tolerances};
use crate::zoo::{build, list_catalog, Params, QEStructure};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First-integral drift allowed on a dumped profile.
pub const PROFILE_DRIFT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Zoo,
    Verify,
    Dim,
    Profile,
    Asympt,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Zoo => "zoo",
            Command::Verify => "verify",
            Command::Dim => "dim",
            Command::Profile => "profile",
            Command::Asympt => "asympt",
        }
    }
}

/// `N` points per axis over the entry's own domain, or
/// `N@lo:hi,lo:hi,...` with explicit per-axis ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub count: usize,
    pub ranges: Option<Vec<(f64, f64)>>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { count: 11, ranges: None }
    }
}

impl FromStr for GridSpec {
    type Err = QeError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || QeError::Config(format!("bad grid spec '{s}'"));
        let (count, ranges) = match s.split_once('@') {
            Some((c, r)) => (c, Some(r)),
            None => (s, None),
        };
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        let ranges = match ranges {
            None => None,
            Some(r) => Some(
                r.split(',')
                    .map(|ax| {
                        let (lo, hi) = ax.split_once(':').ok_or_else(bad)?;
                        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
                        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
                        if lo <= hi {
                            Ok((lo, hi))
                        } else {
                            Err(bad())
                        }
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(Self { count, ranges })
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.count)?;
        if let Some(r) = &self.ranges {
            let axes: Vec<String> = r.iter().map(|(lo, hi)| format!("{lo}:{hi}")).collect();
            write!(f, "@{}", axes.join(","))?;
        }
        Ok(())
    }
}

impl Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl GridSpec {
    /// The grid over `domain`, restricted to the given ranges if any.
    pub fn points(&self, domain: &Domain) -> Result<Vec<Vec<f64>>> {
        match &self.ranges {
            None => Ok(domain.grid(self.count)),
            Some(r) => {
                if r.len() != domain.dim() {
                    return Err(QeError::Config(format!("grid has {} axes, entry has {}", r.len(), domain.dim())));
                }
                let b = Domain::Box { lo: r.iter().map(|p| p.0).collect(), hi: r.iter().map(|p| p.1).collect() };
                Ok(b.grid(self.count))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Everything a command needs. Omitted fields take their defaults; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// Zoo entry, or an end name for `asympt`.
    pub example: Option<String>,
    pub params: Params,
    /// For `dim`, the `lambda` of the equation; for `verify`, must match the entry.
    pub lambda: Option<f64>,
    /// Decay order of the synthetic end.
    pub tau: Option<f64>,
    pub grid: GridSpec,
    pub tolerances: Tolerances,
    /// Overrides the command's headline tolerance.
    pub tol: Option<f64>,
    pub loop_budget: usize,
    pub seed: u64,
    /// Inner radius of asymptotic ends; see [`default_rho`].
    pub rho: Option<f64>,
    pub radii: usize,
    pub directions: usize,
    /// Only list entries of this dimension (`zoo`).
    pub dim_filter: Option<usize>,
    pub format: Format,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            example: None,
            params: Params::default(),
            lambda: None,
            tau: None,
            grid: GridSpec::default(),
            tolerances: Tolerances::default(),
            tol: None,
            loop_budget: DimOptions::default().loop_budget,
            seed: 0,
            rho: None,
            radii: 12,
            directions: 64,
            dim_filter: None,
            format: Format::Text,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| QeError::Config(e.to_string()))
    }

    fn example(&self) -> Result<&str> {
        self.example.as_deref().ok_or_else(|| QeError::Config("no example given".into()))
    }
}

/// Payload of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Detail {
    Residual(ResidualReport),
    Mu(MuStats),
    Dimension(SolutionSpaceEstimate),
    Decay { outcome: DecayOutcome },
    Range { tau: f64, n: usize, branch: Option<ProofBranch> },
    Chain(DecayChain),
    Hessian(HessianDecay),
    Growth(GrowthReport),
    Profile { first_integral_residual: f64, tolerance: f64, t_max: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Detail,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: Detail) -> Self {
        Self { name: name.into(), pass, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl Report {
    fn new(command: Command, config: &RunConfig, checks: Vec<Check>, started: Instant) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        let mut config = config.clone();
        config.command = Some(command);
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.into(),
            version: VERSION.into(),
            command,
            seed: config.seed,
            config,
            checks,
            pass,
            wall_time_s: started.elapsed().as_secs_f64(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with `wall_time_s` zeroed, for run-to-run comparison.
    pub fn to_stable_json(&self) -> String {
        let mut r = self.clone();
        r.wall_time_s = 0.0;
        r.to_json()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let ex = self.config.example.as_deref().unwrap_or("-");
        let _ = writeln!(out, "{} {} (seed {})", self.command.name(), ex, self.seed);
        for c in &self.checks {
            let _ = writeln!(out, "  {:<4} {:<18} {}", if c.pass { "ok" } else { "FAIL" }, c.name, summary(&c.detail));
        }
        let _ = writeln!(out, "{} in {:.2}s", if self.pass { "PASS" } else { "FAIL" }, self.wall_time_s);
        out
    }

    /// `0` when every check passed, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn summary(d: &Detail) -> String {
    match d {
        Detail::Residual(r) => format!(
            "max {:.2e} (tol {:.0e}, {} points, {} failed)",
            r.max,
            r.tolerance,
            r.residuals.len(),
            r.failed_points
        ),
        Detail::Mu(m) => format!(
            "mean {:.12} spread {:.2e} expected {}",
            m.mean,
            m.spread,
            m.expected.map_or("-".into(), |e| e.to_string())
        ),
        Detail::Dimension(e) => format!(
            "dim {} positive {} gap {} sigma {:?}",
            e.dim_estimate,
            e.positive_count,
            e.gap_ratio.map_or("-".into(), |g| format!("{g:.2e}")),
            e.singular_values.iter().map(|s| format!("{s:.2e}")).collect::<Vec<_>>()
        ),
        Detail::Decay { outcome } => outcome_text(outcome),
        Detail::Range { tau, n, branch } => format!("tau {tau:.4} n {n} branch {branch:?}"),
        Detail::Chain(c) => format!(
            "b {} | gamma {} | ric {}",
            outcome_text(&c.b),
            outcome_text(&c.gamma),
            outcome_text(&c.ric)
        ),
        Detail::Hessian(h) => format!("{} target {:.3}", outcome_text(&h.outcome), h.target_slope),
        Detail::Growth(g) => format!(
            "exponent {:.4} alpha {:.4} lower {} upper {}",
            g.exponent, g.alpha, g.lower_ok, g.upper_ok
        ),
        Detail::Profile { first_integral_residual, tolerance, t_max, samples } => {
            format!("drift {first_integral_residual:.2e} (tol {tolerance:.0e}) on [0, {t_max}] x {samples}")
        }
    }
}

fn outcome_text(o: &DecayOutcome) -> String {
    match o {
        DecayOutcome::Fit(f) => format!("slope {:.4} rms {:.1e}", f.slope, f.residual),
        DecayOutcome::Flat { max } => format!("FLAT ({max:.1e})"),
    }
}

/// Maps a library error to a process exit code: `2` for configuration
/// problems, `3` for numerical failures.
pub fn exit_code_for(e: &QeError) -> i32 {
    match e {
        QeError::Unknown(_)
        | QeError::Config(_)
        | QeError::Constraint(_)
        | QeError::Precondition(_)
        | QeError::Dimension { .. } => 2,
        QeError::DegenerateMetric(_)
        | QeError::Evaluation(_)
        | QeError::Inadmissible(_)
        | QeError::StepUnderflow(_)
        | QeError::OpenLoop(_) => 3,
    }
}

/// The catalog as text or JSON.
pub fn cmd_zoo_list(dim: Option<usize>, format: Format) -> String {
    let entries: Vec<_> = list_catalog().into_iter().filter(|e| dim.is_none_or(|d| e.dim == d)).collect();
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Catalog<'a> {
                schema_version: u32,
                entries: &'a [crate::zoo::CatalogEntry],
            }
            serde_json::to_string_pretty(&Catalog { schema_version: SCHEMA_VERSION, entries: &entries })
                .expect("catalog serializes")
        }
        Format::Text => {
            let mut out = String::new();
            for e in &entries {
                let _ = writeln!(out, "{:<20} {}D  {:<10} [{}]  {}", e.name, e.dim, e.tag, e.params.join(","), e.summary);
            }
            out
        }
    }
}

fn structure(config: &RunConfig) -> Result<QEStructure> {
    build(config.example()?, &config.params)
}

pub fn cmd_verify(config: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let s = structure(config)?;
    if let Some(l) = config.lambda {
        if l != s.lambda {
            return Err(QeError::Config(format!("{} has lambda = {}, not {l}", s.name(), s.lambda)));
        }
    }
    let mut tol = config.tolerances;
    if let Some(t) = config.tol {
        tol.qe = t;
        tol.mu = t;
    }
    let s = match &config.grid.ranges {
        None => s,
        Some(_) => {
            let pts = config.grid.points(&s.domain)?;
            let (lo, hi) = bounds(&pts);
            QEStructure { domain: Domain::Box { lo, hi }, ..s }
        }
    };
    let mut checks: Vec<Check> = verify_structure(&s, config.grid.count, &tol, config.seed)
        .into_iter()
        .map(|r| Check::new(r.identity.clone(), r.pass, Detail::Residual(r)))
        .collect();
    let pts = s.domain.grid(config.grid.count);
    let st = mu_stats(&s, &pts)?;
    let mu_ok = st.spread <= tol.mu && st.expected.is_none_or(|e| (st.mean - e).abs() <= tol.mu * (1.0 + e.abs()));
    checks.push(Check::new("mu-value", mu_ok, Detail::Mu(st)));
    Ok(Report::new(Command::Verify, config, checks, started))
}

fn bounds(pts: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = pts.first().map_or(0, |p| p.len());
    let lo = (0..n).map(|i| pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi = (0..n).map(|i| pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    (lo, hi)
}

pub fn cmd_dim(config: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let s = structure(config)?;
    let lambda = config.lambda.unwrap_or(s.lambda);
    let opts = DimOptions {
        loop_budget: config.loop_budget,
        tol: config.tol.unwrap_or(DimOptions::default().tol),
        seed: config.seed,
        ..DimOptions::default()
    };
    let est = estimate_dimension_for(s.provider.as_ref(), s.m, lambda, &s.domain, &opts)?;
    let expected = if lambda == s.lambda { s.expected_dim } else { None };
    let pass = !est.low_confidence && expected.is_none_or(|d| d == est.dim_estimate);
    let checks = vec![Check::new("dimension", pass, Detail::Dimension(est))];
    Ok(Report::new(Command::Dim, config, checks, started))
}

/// Report plus the CSV dump of the entry's profile.
pub fn cmd_profile(config: &RunConfig) -> Result<(Report, String)> {
    let started = Instant::now();
    let s = structure(config)?;
    let sol = s.profile.clone().ok_or_else(|| QeError::Config(format!("{} has no profile", s.name())))?;
    let tolerance = config.tol.unwrap_or(PROFILE_DRIFT_TOL);
    let drift = sol.first_integral_residual;
    let checks = vec![Check::new(
        "first-integral",
        drift <= tolerance,
        Detail::Profile { first_integral_residual: drift, tolerance, t_max: sol.t_max(), samples: sol.grid.len() },
    )];
    Ok((Report::new(Command::Profile, config, checks, started), sol.to_csv()))
}

/// Names accepted by [`cmd_asympt`].
pub const ENDS: &[&str] = &["schwarzschild-end", "euclid-end", "synthetic", "linear-growth", "log-growth"];

/// An asymptotic end plus the potential-like field examined on it.
pub struct EndCase {
    pub end: EndChart,
    pub u: Arc<dyn ScalarField>,
    /// Decay order the Hessian fit is compared against.
    pub tau: f64,
    /// Whether the growth bounds are checked instead of Hessian decay.
    pub growth: bool,
}

/// Inner radius used when none is configured. The growth ends sit far out:
/// `ln r` only falls below `r^alpha` growth once `1 / ln r < alpha`.
pub fn default_rho(name: &str) -> f64 {
    match name {
        "linear-growth" | "log-growth" => 1e10,
        _ => 10.0,
    }
}

pub fn build_end(name: &str, tau: Option<f64>, rho: Option<f64>) -> Result<EndCase> {
    let rho = rho.unwrap_or_else(|| default_rho(name));
    let end = |f: ConformalFactor| EndChart::new(Arc::new(ConformallyFlat::new(f, 3, rho)), rho);
    Ok(match name {
        "schwarzschild-end" => EndCase {
            end: end(ConformalFactor::Schwarzschild { mass: 1.0 })?,
            u: Arc::new(RadialField(RadialProfile::OnePlusInverse { c: 1.0 })),
            tau: 1.0,
            growth: false,
        },
        "euclid-end" => EndCase {
            end: end(ConformalFactor::Flat)?,
            u: Arc::new(crate::field::SeparableField::constant(1.0)),
            tau: 1.0,
            growth: false,
        },
        "synthetic" => {
            let tau = tau.unwrap_or(0.8);
            if !(tau > 0.0) {
                return Err(QeError::Config(format!("tau = {tau} must be positive")));
            }
            EndCase {
                end: end(ConformalFactor::PowerLaw { amp: 1.0, tau })?,
                u: Arc::new(RadialField(RadialProfile::Power { c: 1.0, alpha: 1.0 - tau })),
                tau,
                growth: false,
            }
        }
        "linear-growth" => EndCase {
            end: end(ConformalFactor::Flat)?,
            u: Arc::new(RadialField(RadialProfile::Power { c: 1.0, alpha: 1.0 })),
            tau: 1.0,
            growth: true,
        },
        "log-growth" => EndCase {
            end: end(ConformalFactor::Flat)?,
            u: Arc::new(RadialField(RadialProfile::Log)),
            tau: 1.0,
            growth: true,
        },
        other => return Err(QeError::Unknown(other.into())),
    })
}

pub fn cmd_asympt(config: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let case = build_end(config.example()?, config.tau, config.rho)?;
    let n = case.end.dim();
    let radii = case.end.default_radii(config.radii);
    let dirs = directions(n, config.directions);
    let mut checks = Vec::new();
    if case.growth {
        let g = growth_bounds_check(&case.end, case.u.as_ref(), config.params.m, 0.0, &radii, &dirs)?;
        checks.push(Check::new("growth", g.pass, Detail::Growth(g)));
        return Ok(Report::new(Command::Asympt, config, checks, started));
    }
    let b = fit_decay(&case.end, Quantity::B, None, &radii, &dirs)?;
    if let Some(f) = b.fit() {
        let mut ok = validate_af_range(f, n);
        if let Some(t) = config.tau {
            ok &= (f.tau - t).abs() <= crate::asymptotics::EXPONENT_SLACK * t;
        }
        checks.push(Check::new("b-decay", ok, Detail::Decay { outcome: b.clone() }));
        let snapped = if (f.tau - n as f64 + 2.0).abs() <= crate::asymptotics::EXPONENT_SLACK { n as f64 - 2.0 } else { f.tau };
        let branch = if af_range_contains(snapped, n) { proof_branch(snapped, n).ok() } else { None };
        checks.push(Check::new("af-range", ok, Detail::Range { tau: f.tau, n, branch }));
    } else {
        checks.push(Check::new("b-decay", true, Detail::Decay { outcome: b.clone() }));
    }
    for q in [Quantity::DB, Quantity::DDB] {
        let o = fit_decay(&case.end, q, None, &radii, &dirs)?;
        let offset = if q == Quantity::DB { 1.0 } else { 2.0 };
        let ok = match (b.fit(), o.fit()) {
            (_, None) => true,
            (Some(fb), Some(fq)) => fq.slope <= fb.slope - offset + crate::asymptotics::CHAIN_SLACK,
            (None, Some(_)) => false,
        };
        let name = if q == Quantity::DB { "db-decay" } else { "ddb-decay" };
        checks.push(Check::new(name, ok, Detail::Decay { outcome: o }));
    }
    let chain = decay_chain(&case.end, &radii, &dirs)?;
    checks.push(Check::new("decay-chain", chain.pass, Detail::Chain(chain)));
    let h = coordinate_hessian_decay(&case.end, case.u.as_ref(), case.tau, &radii, &dirs)?;
    checks.push(Check::new("u-hessian", h.pass, Detail::Hessian(h)));
    Ok(Report::new(Command::Asympt, config, checks, started))
}

/// Dispatches on `config.command`; `zoo` is handled by [`cmd_zoo_list`].
pub fn run(config: &RunConfig) -> Result<Report> {
    match config.command {
        Some(Command::Verify) => cmd_verify(config),
        Some(Command::Dim) => cmd_dim(config),
        Some(Command::Profile) => cmd_profile(config).map(|r| r.0),
        Some(Command::Asympt) => cmd_asympt(config),
        Some(Command::Zoo) | None => Err(QeError::Config("no report-producing command given".into())),
    }
}
