//! Closed-form quasi-Einstein structures.
//!
//! Every entry is a diagonal metric built from separable factors, so metric
//! derivatives are analytic. Profile entries embed an integrated
//! [`ProfileSolution`] and evaluate it through its jet.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QeError, Result};
use crate::field::{Factor, Monomial, ScalarField, SeparableField};
use crate::metric::{DiagonalMetric, Domain, MetricProvider};
use crate::profile::{integrate_profile, FiberKind, MuSign, ProfileFamily, ProfileSolution};

/// Profiles are integrated on `[0, PROFILE_T_MAX]`.
pub const PROFILE_T_MAX: f64 = 3.0;
/// First-integral tolerance for embedded profiles.
pub const PROFILE_TOL: f64 = 1e-10;

/// Build parameters. Unused fields are ignored by entries that do not take them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub m: f64,
    /// Initial value of the polar profiles.
    pub a: Option<f64>,
    /// Scale of the constant-warp product.
    pub c: Option<f64>,
    /// Base parameter of the surfaces; defaults to `m + 1`.
    pub p: Option<f64>,
    pub fiber: Option<FiberKind>,
    pub mu: Option<MuSign>,
}

impl Default for Params {
    fn default() -> Self {
        Self { m: 2.0, a: None, c: None, p: None, fiber: None, mu: None }
    }
}

impl Params {
    pub fn with_m(m: f64) -> Self {
        Self { m, ..Self::default() }
    }

    pub fn a(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }

    pub fn c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn fiber(mut self, f: FiberKind) -> Self {
        self.fiber = Some(f);
        self
    }

    pub fn mu(mut self, s: MuSign) -> Self {
        self.mu = Some(s);
        self
    }
}

/// Catalog name plus the parameters actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub name: String,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub dim: usize,
    pub params: Vec<&'static str>,
    pub tag: &'static str,
    pub summary: &'static str,
}

/// `(M, g, u, lambda)` together with `m` and what is known about it.
#[derive(Clone)]
pub struct QEStructure {
    pub descriptor: Descriptor,
    pub provider: Arc<dyn MetricProvider>,
    pub u: Arc<dyn ScalarField>,
    pub m: f64,
    pub lambda: f64,
    pub mu_expected: Option<f64>,
    pub domain: Domain,
    /// Closed-form elements of the solution space, `u` first.
    pub known_solutions: Vec<Arc<dyn ScalarField>>,
    pub profile: Option<Arc<ProfileSolution>>,
    /// Dimension of the full solution space where it is known in closed form.
    pub expected_dim: Option<usize>,
    /// `Some(k)` when `Ric = k g`.
    pub einstein: Option<f64>,
}

impl QEStructure {
    pub fn name(&self) -> &str {
        &self.descriptor.name
    }

    pub fn dim(&self) -> usize {
        self.provider.dim()
    }
}

impl std::fmt::Debug for QEStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QEStructure")
            .field("descriptor", &self.descriptor)
            .field("m", &self.m)
            .field("lambda", &self.lambda)
            .field("mu_expected", &self.mu_expected)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

const CATALOG: &[(&str, usize, &[&str], &str, &str)] = &[
    ("table1-line-exp", 1, &["m"], "table1:1", "(R, dr^2, e^r, -m)"),
    ("table1-line-cosh", 1, &["m"], "table1:2", "(R, dr^2, cosh r, -m)"),
    ("table1-product-exp", 3, &["m"], "table1:3", "H^2(-m) x R, u = e^r"),
    ("table1-product-cosh", 3, &["m"], "table1:4", "H^2(-m) x R, u = cosh r"),
    ("thm1-i", 3, &["m", "c", "fiber"], "thm1:i", "B x R with g_B + c^2 dr^2, u = c v(r)"),
    ("thm1-ii", 3, &["m", "fiber"], "thm1:ii", "dx^2 + f'^2 dy^2 + f^2 dr^2, u = f v"),
    ("thm1-iii", 3, &["m", "a", "fiber"], "thm1:iii", "dt^2 + b^2 f'^2 dth^2 + f^2 dr^2, u = f v"),
    ("case2-a", 3, &["m"], "case2:a", "dr^2 + e^{2r}(dx^2 + dy^2), u = e^r"),
    ("case2-b", 3, &["m"], "case2:b", "H^3 polar, u = cosh r"),
    ("besse-9118-a", 2, &["m", "p"], "9.118:a", "dt^2 + 4f'^2/(p-1)^2 dth^2, lambda = 0"),
    ("besse-9118-b", 2, &["m", "p"], "9.118:b", "dx^2 + e^{2x} dy^2, f = e^x"),
    ("besse-9118-c", 2, &["m", "p"], "9.118:c", "dx^2 + f'^2 dy^2"),
    ("besse-9118-d", 2, &["m", "p", "a", "mu"], "9.118:d", "dt^2 + b^2 f'^2 dth^2"),
    ("fiber-exp", 1, &["m"], "fiber:e", "(R, dr^2, e^r), lambda = -m"),
    ("fiber-cosh", 1, &["m"], "fiber:f", "(R, dr^2, cosh r), lambda = -m"),
    ("fiber-const", 1, &["m"], "fiber:g", "(R, dr^2, 1), lambda = 0"),
    ("euclid3", 3, &["m"], "flat", "(R^3, delta, 1), lambda = 0"),
];

/// All catalog entries, in a fixed order.
pub fn list_catalog() -> Vec<CatalogEntry> {
    CATALOG
        .iter()
        .map(|&(name, dim, params, tag, summary)| CatalogEntry { name, dim, params: params.to_vec(), tag, summary })
        .collect()
}

/// Realizations of a two-dimensional `lambda`-Einstein base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    HyperbolicPlaneScaled,
}

impl BaseKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hyperbolic" | "hyperbolic-plane-scaled" => Ok(BaseKind::HyperbolicPlaneScaled),
            other => Err(QeError::Unknown(other.into())),
        }
    }
}

fn base_components(lambda: f64) -> Result<Vec<Monomial>> {
    if !(lambda < 0.0) {
        return Err(QeError::Constraint(format!("Einstein base needs lambda < 0, got {lambda}")));
    }
    let k = (-lambda).sqrt();
    Ok(vec![Monomial::constant(1.0), Monomial::new(1.0, vec![(0, Factor::Exp(2.0 * k))])])
}

/// `dx^2 + e^{2 sqrt(-lambda) x} dy^2`, whose Gauss curvature is `lambda`.
pub fn einstein_base(kind: BaseKind, lambda: f64) -> Result<DiagonalMetric> {
    match kind {
        BaseKind::HyperbolicPlaneScaled => Ok(DiagonalMetric::new(base_components(lambda)?, Domain::cube(2, 3.0))),
    }
}

fn mono(coef: f64, factors: Vec<(usize, Factor)>) -> Arc<dyn ScalarField> {
    Arc::new(SeparableField::single(Monomial::new(coef, factors)))
}

fn sum(terms: Vec<Monomial>) -> Arc<dyn ScalarField> {
    Arc::new(SeparableField::new(terms))
}

fn fiber_mu(kind: FiberKind, m: f64) -> f64 {
    match kind {
        FiberKind::Exp | FiberKind::Const => 0.0,
        FiberKind::Cosh => -(m - 1.0),
    }
}

fn fiber_factor(kind: FiberKind) -> Factor {
    match kind {
        FiberKind::Exp => Factor::Exp(1.0),
        FiberKind::Cosh => Factor::Cosh,
        FiberKind::Const => Factor::Const(1.0),
    }
}

fn warped_fiber(params: &Params, default: FiberKind) -> Result<FiberKind> {
    let kind = params.fiber.unwrap_or(default);
    if kind == FiberKind::Const {
        return Err(QeError::Constraint("fiber must be exp or cosh for this model".into()));
    }
    Ok(kind)
}

fn profile(family: ProfileFamily) -> Result<Arc<ProfileSolution>> {
    Ok(Arc::new(integrate_profile(&family.ode()?, PROFILE_T_MAX, PROFILE_TOL)?))
}

fn boxed(lo: &[f64], hi: &[f64]) -> Domain {
    Domain::Box { lo: lo.to_vec(), hi: hi.to_vec() }
}

struct Parts {
    components: Vec<Monomial>,
    domain: Domain,
    u: Arc<dyn ScalarField>,
    m: f64,
    lambda: f64,
    mu: Option<f64>,
    known: Vec<Arc<dyn ScalarField>>,
    profile: Option<Arc<ProfileSolution>>,
    expected_dim: Option<usize>,
    einstein: Option<f64>,
}

impl Parts {
    fn line(m: f64, v: Factor, lambda: f64, mu: f64, known: Vec<Arc<dyn ScalarField>>) -> Self {
        Parts {
            components: vec![Monomial::constant(1.0)],
            domain: Domain::cube(1, 3.0),
            u: mono(1.0, vec![(0, v)]),
            m,
            lambda,
            mu: Some(mu),
            known,
            profile: None,
            expected_dim: Some(2),
            einstein: Some(0.0),
        }
    }
}

fn line_pair(axis: usize) -> Vec<Arc<dyn ScalarField>> {
    vec![mono(1.0, vec![(axis, Factor::Exp(1.0))]), mono(1.0, vec![(axis, Factor::Exp(-1.0))])]
}

fn with_first(u: &Arc<dyn ScalarField>, rest: Vec<Arc<dyn ScalarField>>) -> Vec<Arc<dyn ScalarField>> {
    let mut v = vec![u.clone()];
    v.extend(rest);
    v
}

/// Builds a catalog entry. `"table1-product"` is accepted as an alias of
/// `"table1-product-exp"`.
pub fn build(name: &str, params: &Params) -> Result<QEStructure> {
    let m = params.m;
    if !(m > 0.0) || !m.is_finite() {
        return Err(QeError::Constraint(format!("m = {m} must be positive")));
    }
    let canonical = if name == "table1-product" { "table1-product-exp" } else { name };
    let parts = match canonical {
        "table1-line-exp" | "fiber-exp" => {
            let u = mono(1.0, vec![(0, Factor::Exp(1.0))]);
            let known = with_first(&u, vec![mono(1.0, vec![(0, Factor::Exp(-1.0))])]);
            Parts::line(m, Factor::Exp(1.0), -m, 0.0, known)
        }
        "table1-line-cosh" | "fiber-cosh" => {
            let u = mono(1.0, vec![(0, Factor::Cosh)]);
            Parts::line(m, Factor::Cosh, -m, -(m - 1.0), with_first(&u, line_pair(0)))
        }
        "fiber-const" => {
            let u = mono(1.0, vec![(0, Factor::Const(1.0))]);
            Parts::line(m, Factor::Const(1.0), 0.0, 0.0, with_first(&u, vec![mono(1.0, vec![(0, Factor::Linear)])]))
        }
        "table1-product-exp" | "table1-product-cosh" | "thm1-i" => {
            let (c, kind) = if canonical == "thm1-i" {
                let c = params.c.unwrap_or(1.0);
                if !(c > 0.0) {
                    return Err(QeError::Constraint(format!("c = {c} must be positive")));
                }
                require_m_gt_one(m)?;
                (c, warped_fiber(params, FiberKind::Exp)?)
            } else if canonical == "table1-product-exp" {
                (1.0, FiberKind::Exp)
            } else {
                (1.0, FiberKind::Cosh)
            };
            let lambda = -m / (c * c);
            let mut components = base_components(lambda)?;
            components.push(Monomial::constant(c * c));
            let u = mono(c, vec![(2, fiber_factor(kind))]);
            let known = with_first(&u, line_pair(2));
            Parts {
                components,
                domain: Domain::cube(3, 3.0),
                u,
                m,
                lambda,
                mu: Some(fiber_mu(kind, m)),
                known,
                profile: None,
                expected_dim: Some(2),
                einstein: None,
            }
        }
        "thm1-ii" => {
            require_m_gt_one(m)?;
            let kind = warped_fiber(params, FiberKind::Exp)?;
            let sol = profile(ProfileFamily::C { p: m + 1.0 })?;
            let f = || Factor::Profile(sol.clone());
            let components = vec![
                Monomial::constant(1.0),
                Monomial::new(1.0, vec![(0, Factor::ProfileSlope(sol.clone()).square())]),
                Monomial::new(1.0, vec![(0, f().square())]),
            ];
            let u = mono(1.0, vec![(0, f()), (2, fiber_factor(kind))]);
            let known = with_first(
                &u,
                vec![mono(1.0, vec![(0, f()), (2, Factor::Exp(1.0))]), mono(1.0, vec![(0, f()), (2, Factor::Exp(-1.0))])],
            );
            Parts {
                components,
                domain: boxed(&[0.1, -3.0, -3.0], &[2.5, 3.0, 3.0]),
                u,
                m,
                lambda: -(m + 2.0),
                mu: Some(fiber_mu(kind, m)),
                known,
                profile: Some(sol),
                expected_dim: Some(2),
                einstein: None,
            }
        }
        "thm1-iii" => {
            require_m_gt_one(m)?;
            let kind = warped_fiber(params, FiberKind::Exp)?;
            let a = params.a.unwrap_or(2.0);
            let a_min = (m / (m + 2.0)).sqrt();
            if !(a > a_min) {
                return Err(QeError::Constraint(format!("a = {a} must exceed sqrt(m/(m+2)) = {a_min}")));
            }
            let family = ProfileFamily::D { p: m + 1.0, a, mu: MuSign::Neg };
            let b = family.angular_scale().expect("polar family");
            let sol = profile(family)?;
            let f = || Factor::Profile(sol.clone());
            let components = vec![
                Monomial::constant(1.0),
                Monomial::new(b * b, vec![(0, Factor::ProfileSlope(sol.clone()).square())]),
                Monomial::new(1.0, vec![(0, f().square())]),
            ];
            let u = mono(1.0, vec![(0, f()), (2, fiber_factor(kind))]);
            // a = 1 is hyperbolic space: f = cosh t, b = 1
            let hyperbolic = a == 1.0;
            let known = if hyperbolic {
                with_first(
                    &u,
                    vec![
                        mono(1.0, vec![(0, Factor::Cosh), (2, Factor::Cosh)]),
                        mono(1.0, vec![(0, Factor::Cosh), (2, Factor::Sinh)]),
                        mono(1.0, vec![(0, Factor::Sinh), (1, Factor::Cos)]),
                        mono(1.0, vec![(0, Factor::Sinh), (1, Factor::Sin)]),
                    ],
                )
            } else {
                with_first(
                    &u,
                    vec![mono(1.0, vec![(0, f()), (2, Factor::Exp(1.0))]), mono(1.0, vec![(0, f()), (2, Factor::Exp(-1.0))])],
                )
            };
            Parts {
                components,
                domain: boxed(&[0.25, -3.0, -3.0], &[2.5, 3.0, 3.0]),
                u,
                m,
                lambda: -(m + 2.0),
                mu: Some(fiber_mu(kind, m)),
                known,
                profile: Some(sol),
                expected_dim: Some(if hyperbolic { 4 } else { 2 }),
                einstein: if hyperbolic { Some(-2.0) } else { None },
            }
        }
        "case2-a" => {
            let u = mono(1.0, vec![(0, Factor::Exp(1.0))]);
            let known = with_first(
                &u,
                vec![
                    mono(1.0, vec![(0, Factor::Exp(1.0)), (1, Factor::Linear)]),
                    mono(1.0, vec![(0, Factor::Exp(1.0)), (2, Factor::Linear)]),
                    sum(vec![
                        Monomial::new(1.0, vec![(0, Factor::Exp(-1.0))]),
                        Monomial::new(1.0, vec![(0, Factor::Exp(1.0)), (1, Factor::Linear.square())]),
                        Monomial::new(1.0, vec![(0, Factor::Exp(1.0)), (2, Factor::Linear.square())]),
                    ]),
                ],
            );
            Parts {
                components: vec![
                    Monomial::constant(1.0),
                    Monomial::new(1.0, vec![(0, Factor::Exp(2.0))]),
                    Monomial::new(1.0, vec![(0, Factor::Exp(2.0))]),
                ],
                domain: Domain::cube(3, 3.0),
                u,
                m,
                lambda: -(m + 2.0),
                mu: Some(0.0),
                known,
                profile: None,
                expected_dim: Some(4),
                einstein: Some(-2.0),
            }
        }
        "case2-b" => {
            let u = mono(1.0, vec![(0, Factor::Cosh)]);
            let known = with_first(
                &u,
                vec![
                    mono(1.0, vec![(0, Factor::Sinh), (1, Factor::Sin), (2, Factor::Cos)]),
                    mono(1.0, vec![(0, Factor::Sinh), (1, Factor::Sin), (2, Factor::Sin)]),
                    mono(1.0, vec![(0, Factor::Sinh), (1, Factor::Cos)]),
                ],
            );
            Parts {
                components: vec![
                    Monomial::constant(1.0),
                    Monomial::new(1.0, vec![(0, Factor::Sinh.square())]),
                    Monomial::new(1.0, vec![(0, Factor::Sinh.square()), (1, Factor::Sin.square())]),
                ],
                domain: boxed(&[0.3, 0.3, -3.0], &[3.0, std::f64::consts::PI - 0.3, 3.0]),
                u,
                m,
                lambda: -(m + 2.0),
                mu: Some(-(m - 1.0)),
                known,
                profile: None,
                expected_dim: Some(4),
                einstein: Some(-2.0),
            }
        }
        "besse-9118-a" | "besse-9118-b" | "besse-9118-c" | "besse-9118-d" => besse(canonical, params)?,
        "euclid3" => {
            let u = mono(1.0, vec![]);
            let known = with_first(&u, (0..3).map(|i| mono(1.0, vec![(i, Factor::Linear)])).collect());
            Parts {
                components: vec![Monomial::constant(1.0); 3],
                domain: Domain::cube(3, 3.0),
                u,
                m,
                lambda: 0.0,
                mu: Some(0.0),
                known,
                profile: None,
                expected_dim: Some(4),
                einstein: Some(0.0),
            }
        }
        other => return Err(QeError::Unknown(other.to_string())),
    };
    let provider: Arc<dyn MetricProvider> = Arc::new(DiagonalMetric::new(parts.components, parts.domain.clone()));
    Ok(QEStructure {
        descriptor: Descriptor { name: canonical.to_string(), params: params.clone() },
        provider,
        u: parts.u,
        m: parts.m,
        lambda: parts.lambda,
        mu_expected: parts.mu,
        domain: parts.domain,
        known_solutions: parts.known,
        profile: parts.profile,
        expected_dim: parts.expected_dim,
        einstein: parts.einstein,
    })
}

fn require_m_gt_one(m: f64) -> Result<()> {
    if m > 1.0 {
        Ok(())
    } else {
        Err(QeError::Constraint(format!("m = {m} must exceed 1")))
    }
}

/// Surfaces are quasi-Einstein with parameter `p`, not `m`.
fn besse(name: &str, params: &Params) -> Result<Parts> {
    let p = params.p.unwrap_or(params.m + 1.0);
    let family = match name {
        "besse-9118-a" => ProfileFamily::A { p },
        "besse-9118-b" => ProfileFamily::B { p },
        "besse-9118-c" => ProfileFamily::C { p },
        _ => ProfileFamily::D { p, a: params.a.unwrap_or(2.0), mu: params.mu.unwrap_or(MuSign::Neg) },
    };
    family.ode()?;
    let lambda = family.lambda();
    let mu = Some(family.mu());
    if let ProfileFamily::B { .. } = family {
        let u = mono(1.0, vec![(0, Factor::Exp(1.0))]);
        let known = with_first(
            &u,
            vec![
                mono(1.0, vec![(0, Factor::Exp(1.0)), (1, Factor::Linear)]),
                sum(vec![
                    Monomial::new(1.0, vec![(0, Factor::Exp(-1.0))]),
                    Monomial::new(1.0, vec![(0, Factor::Exp(1.0)), (1, Factor::Linear.square())]),
                ]),
            ],
        );
        return Ok(Parts {
            components: vec![Monomial::constant(1.0), Monomial::new(1.0, vec![(0, Factor::Exp(2.0))])],
            domain: Domain::cube(2, 3.0),
            u,
            m: p,
            lambda,
            mu,
            known,
            profile: None,
            expected_dim: Some(3),
            einstein: Some(-1.0),
        });
    }
    let sol = profile(family)?;
    let slope2 = Factor::ProfileSlope(sol.clone()).square();
    let (components, domain) = match family.angular_scale() {
        Some(b) => (
            vec![Monomial::constant(1.0), Monomial::new(b * b, vec![(0, slope2)])],
            boxed(&[0.25, -3.0], &[2.5, 3.0]),
        ),
        None => (vec![Monomial::constant(1.0), Monomial::new(1.0, vec![(0, slope2)])], boxed(&[0.1, -3.0], &[2.5, 3.0])),
    };
    let u = mono(1.0, vec![(0, Factor::Profile(sol.clone()))]);
    let hyperbolic = matches!(family, ProfileFamily::D { a, mu: MuSign::Neg, .. } if a == 1.0);
    Ok(Parts {
        components,
        domain,
        known: vec![u.clone()],
        u,
        m: p,
        lambda,
        mu,
        profile: Some(sol),
        expected_dim: Some(if hyperbolic { 3 } else { 1 }),
        einstein: if hyperbolic { Some(-1.0) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_stable() {
        let a = list_catalog();
        assert!(a.len() >= 12);
        assert_eq!(a, list_catalog());
        for key in ["table1-line-exp", "thm1-iii", "besse-9118-a"] {
            assert!(a.iter().any(|e| e.name == key));
        }
    }

    #[test]
    fn every_entry_builds() {
        for e in list_catalog() {
            let s = build(e.name, &Params::default()).unwrap();
            assert_eq!(s.dim(), e.dim, "{}", e.name);
            assert!(s.u.value(&s.domain.center()).unwrap() > 0.0);
            assert!(s.lambda <= 0.0);
        }
    }

    #[test]
    fn constraints() {
        assert!(build("thm1-iii", &Params::with_m(2.0).a(0.7)).is_err());
        assert!(build("thm1-iii", &Params::with_m(2.0).a(0.71)).is_ok());
        assert!(build("thm1-ii", &Params::with_m(1.0)).is_err());
        assert!(build("thm1-i", &Params::with_m(0.5)).is_err());
        assert!(build("nope", &Params::default()).is_err());
        assert!(build("thm1-ii", &Params::default().fiber(FiberKind::Const)).is_err());
        assert!(einstein_base(BaseKind::HyperbolicPlaneScaled, 0.0).is_err());
    }

    #[test]
    fn thm1_iii_special_case_is_cosh() {
        let s = build("thm1-iii", &Params::with_m(2.0).a(1.0)).unwrap();
        let g = s.provider.metric(&[1.0, 0.0, 0.0]).unwrap();
        assert!((g[(1, 1)] - 1f64.sinh().powi(2)).abs() < 1e-9);
        assert!((g[(2, 2)] - 1f64.cosh().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn table1_values() {
        let s = build("table1-line-cosh", &Params::with_m(3.0)).unwrap();
        assert_eq!((s.lambda, s.mu_expected), (-3.0, Some(-2.0)));
        let s = build("case2-b", &Params::with_m(2.0)).unwrap();
        assert_eq!(s.lambda, -4.0);
        assert_eq!(build("table1-product", &Params::default()).unwrap().name(), "table1-product-exp");
    }
}
