use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use qelab::asymptotics::{af_range_contains, power_law_fit, Quantity};
use qelab::field::{Factor, Monomial, SeparableField};
use qelab::geometry::{covariant_ricci_derivative, curvature, hessian, scalar_curvature_jet, PointGeometry};
use qelab::metric::{Domain, FdOnly, MetricProvider};
use qelab::profile::{integrate_profile, ProfileFamily};
use qelab::report::GridSpec;
use qelab::solution_space::{
    estimate_dimension, quotient_dichotomy_scan, state_of, transport, Dichotomy, DimOptions, Path,
};
use qelab::verifier::{qe_residual, trace_residual};
use qelab::zoo::{build, list_catalog, Params, QEStructure};

const THREE_D: [&str; 5] = ["thm1-ii", "thm1-iii", "case2-a", "case2-b", "table1-product-cosh"];

fn entry(i: usize) -> QEStructure {
    build(THREE_D[i % THREE_D.len()], &Params::with_m(2.0)).unwrap()
}

/// Maps `t` in `[0, 1]^n` into the inner 90% of a box domain.
fn point_in(domain: &Domain, t: &[f64]) -> Vec<f64> {
    let Domain::Box { lo, hi } = domain else { panic!("box domain expected") };
    lo.iter().zip(hi).zip(t).map(|((l, h), s)| l + (h - l) * (0.05 + 0.9 * s)).collect()
}

fn unit3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn christoffel_symmetric_and_metric_compatible(i in 0usize..5, t in unit3()) {
        let s = entry(i);
        let x = point_in(&s.domain, &t);
        for fd in [false, true] {
            let wrapped = FdOnly(s.provider.as_ref());
            let p: &dyn MetricProvider = if fd { &wrapped } else { s.provider.as_ref() };
            let pg = PointGeometry::first_order(p, &x).unwrap();
            let n = 3;
            let scale = 1.0 + pg.dg.iter().map(|m| m.amax()).fold(0.0, f64::max);
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        prop_assert_eq!(pg.gamma.get(k, a, b), pg.gamma.get(k, b, a));
                        let mut r = pg.dg[k][(a, b)];
                        for l in 0..n {
                            r -= pg.gamma.get(l, k, a) * pg.g[(l, b)] + pg.gamma.get(l, k, b) * pg.g[(a, l)];
                        }
                        prop_assert!(r.abs() <= 1e-12 * scale, "nabla g = {r} (fd = {fd})");
                    }
                }
            }
        }
    }

    #[test]
    fn contracted_bianchi(i in 0usize..5, t in unit3()) {
        let s = entry(i);
        let x = point_in(&s.domain, &t);
        let p = s.provider.as_ref();
        let (dric, err) = covariant_ricci_derivative(p, &x).unwrap();
        let jet = scalar_curvature_jet(p, &x).unwrap();
        let ginv = PointGeometry::first_order(p, &x).unwrap().ginv;
        for b in 0..3 {
            let mut div = 0.0;
            for c in 0..3 {
                for a in 0..3 {
                    div += ginv[(c, a)] * dric.get(c, a, b);
                }
            }
            let r = div - 0.5 * jet.gradient[b];
            prop_assert!(r.abs() <= 10.0 * (err + jet.gradient_error) + 1e-7, "bianchi {r}, err {err}");
        }
    }

    #[test]
    fn hessian_linear_and_symmetric(i in 0usize..5, t in unit3(), al in -3.0..3.0f64, be in -3.0..3.0f64) {
        let s = entry(i);
        let x = point_in(&s.domain, &t);
        let u = SeparableField::single(Monomial::new(1.0, vec![(0, Factor::Sin), (1, Factor::Exp(0.5))]));
        let v = SeparableField::single(Monomial::new(1.0, vec![(2, Factor::Cosh), (0, Factor::Linear)]));
        let w = u.scaled(al).plus(&v.scaled(be));
        let p = s.provider.as_ref();
        let (hu, hv, hw) = (hessian(p, &u, &x).unwrap(), hessian(p, &v, &x).unwrap(), hessian(p, &w, &x).unwrap());
        let combo = hu.scale(al).add(&hv.scale(be));
        let scale = 1.0 + combo.matrix().amax();
        prop_assert!((hw.matrix() - combo.matrix()).amax() <= 1e-12 * scale);
        prop_assert!((hw.matrix() - hw.matrix().transpose()).amax() == 0.0);
    }

    #[test]
    fn trace_residual_is_trace_of_qe_residual(i in 0usize..5, t in unit3()) {
        let s = entry(i);
        let x = point_in(&s.domain, &t);
        let ginv = PointGeometry::first_order(s.provider.as_ref(), &x).unwrap().ginv;
        let tr = qe_residual(&s, &x).unwrap().trace_with(&ginv);
        let direct = trace_residual(&s, &x).unwrap();
        prop_assert!((tr - direct).abs() <= 1e-12 * (1.0 + s.u.value(&x).unwrap().abs()));
    }

    #[test]
    fn transport_is_linear(i in 0usize..5, t0 in unit3(), t1 in unit3(),
                           s1 in prop::collection::vec(-2.0..2.0f64, 4), s2 in prop::collection::vec(-2.0..2.0f64, 4),
                           al in -2.0..2.0f64, be in -2.0..2.0f64) {
        let s = entry(i);
        let path = Path::segment(&point_in(&s.domain, &t0), &point_in(&s.domain, &t1));
        let op = transport(s.provider.as_ref(), s.m, s.lambda, &path, 1e-10).unwrap();
        let mix: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| al * a + be * b).collect();
        let lhs = op.apply(&mix);
        let (r1, r2) = (op.apply(&s1), op.apply(&s2));
        for k in 0..4 {
            let rhs = al * r1[k] + be * r2[k];
            prop_assert!((lhs[k] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs() + op.matrix.amax() * 8.0));
        }
    }

    #[test]
    fn transport_concatenates(i in 0usize..5, a in unit3(), b in unit3(), c in unit3()) {
        let s = entry(i);
        let (a, b, c) = (point_in(&s.domain, &a), point_in(&s.domain, &b), point_in(&s.domain, &c));
        let (p1, p2) = (Path::segment(&a, &b), Path::segment(&b, &c));
        let p = s.provider.as_ref();
        let t1 = transport(p, s.m, s.lambda, &p1, 1e-11).unwrap();
        let t2 = transport(p, s.m, s.lambda, &p2, 1e-11).unwrap();
        let t12 = transport(p, s.m, s.lambda, &p1.then(&p2).unwrap(), 1e-11).unwrap();
        let prod: DMatrix<f64> = &t2.matrix * &t1.matrix;
        let bound = 100.0 * (t1.error + t2.error + t12.error) + 1e-9 * prod.amax();
        prop_assert!((&t12.matrix - &prod).amax() <= bound, "{} > {bound}", (&t12.matrix - &prod).amax());
    }

    #[test]
    fn known_solutions_transport(i in 0usize..5, t0 in unit3(), t1 in unit3()) {
        let s = entry(i);
        let (x0, x1) = (point_in(&s.domain, &t0), point_in(&s.domain, &t1));
        let op = transport(s.provider.as_ref(), s.m, s.lambda, &Path::segment(&x0, &x1), 1e-11).unwrap();
        for u in &s.known_solutions {
            let got = op.apply(&state_of(u.as_ref(), &x0).unwrap());
            let want = state_of(u.as_ref(), &x1).unwrap();
            let scale = want.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for k in 0..4 {
                prop_assert!((got[k] - want[k]).abs() <= 1e-7 * scale);
            }
        }
    }

    #[test]
    fn fit_is_scale_equivariant(tau in 0.1..3.0f64, c in 1e-3..1e3f64, k in 1e-4..1e4f64) {
        let radii: Vec<f64> = (0..10).map(|i| 2.0 * 1.5f64.powi(i)).collect();
        let vals: Vec<f64> = radii.iter().map(|r| c * r.powf(-tau) * (1.0 + 0.1 / r)).collect();
        let scaled: Vec<f64> = vals.iter().map(|v| k * v).collect();
        let a = power_law_fit(Quantity::B, &radii, &vals).unwrap();
        let b = power_law_fit(Quantity::B, &radii, &scaled).unwrap();
        let (a, b) = (a.fit().unwrap(), b.fit().unwrap());
        prop_assert!((a.tau - b.tau).abs() <= 1e-6);
        prop_assert!((b.c / a.c / k - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn tau_above_one_is_never_admissible_in_three_dimensions(tau in 1.0..10.0f64) {
        prop_assume!(tau > 1.0);
        prop_assert!(!af_range_contains(tau, 3));
        prop_assert_eq!(af_range_contains(tau, 4), tau <= 2.0);
    }

    #[test]
    fn grid_spec_roundtrip(count in 1usize..40, axes in prop::collection::vec((-10i32..10, 0i32..10), 1..4)) {
        let ranges: Vec<(f64, f64)> = axes.iter().map(|&(l, w)| (l as f64, (l + w) as f64)).collect();
        let g = GridSpec { count, ranges: Some(ranges) };
        prop_assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
    }
}

#[test]
fn estimator_monotone_in_loops() {
    for name in ["thm1-ii", "case2-a", "table1-product"] {
        let s = build(name, &Params::with_m(2.0)).unwrap();
        let mut last = usize::MAX;
        for budget in [0, 2, 6, 12] {
            let est = estimate_dimension(&s, &DimOptions { loop_budget: budget, ..DimOptions::default() }).unwrap();
            assert!(est.dim_estimate <= last, "{name}: {} after {last}", est.dim_estimate);
            last = est.dim_estimate;
        }
    }
}

#[test]
fn product_potential_ignores_base() {
    for name in ["table1-product-exp", "table1-product-cosh"] {
        let s = build(name, &Params::with_m(2.0)).unwrap();
        for x in s.domain.grid(5) {
            let h = s.u.coord_hessian(&x).unwrap();
            let g = s.u.gradient(&x).unwrap();
            assert_eq!(g[0], 0.0);
            assert_eq!(g[1], 0.0);
            assert_relative_eq!(h[(2, 2)], s.u.value(&x).unwrap(), max_relative = 1e-14);
        }
    }
}

#[test]
fn family_c_slope_stays_positive() {
    for p in [1.5, 2.0, 3.0, 5.0] {
        let sol = integrate_profile(&ProfileFamily::C { p }.ode().unwrap(), 3.0, 1e-10).unwrap();
        assert!(sol.fp.iter().all(|d| *d > 0.0), "p = {p}");
        assert!(sol.first_integral_residual <= 1e-9);
    }
}

#[test]
fn dichotomy_on_known_pairs() {
    for e in list_catalog().into_iter().filter(|e| e.dim >= 2) {
        let s = build(e.name, &Params::with_m(2.0)).unwrap();
        let grid = s.domain.grid(if e.dim == 3 { 5 } else { 9 });
        let sols = &s.known_solutions;
        for i in 0..sols.len() {
            for j in 0..sols.len() {
                if i == j || !grid.iter().all(|x| sols[i].value(x).unwrap() > 0.0) {
                    continue;
                }
                let scan = quotient_dichotomy_scan(s.provider.as_ref(), sols[i].as_ref(), sols[j].as_ref(), &grid).unwrap();
                assert_ne!(scan.class, Dichotomy::Violation, "{} pair ({i}, {j})", e.name);
            }
        }
    }
}

#[test]
fn curvature_bundle_consistent() {
    let s = build("thm1-ii", &Params::with_m(2.0)).unwrap();
    let x = s.domain.center();
    let c = curvature(s.provider.as_ref(), &x, true).unwrap();
    let rm = c.riemann.unwrap();
    let ginv = PointGeometry::first_order(s.provider.as_ref(), &x).unwrap().ginv;
    // Ric_bd = g^ca R_cbad in this index layout
    for b in 0..3 {
        for d in 0..3 {
            let mut r = 0.0;
            for cc in 0..3 {
                for a in 0..3 {
                    r += ginv[(cc, a)] * rm.get(cc, b, a, d);
                }
            }
            assert!((r - c.ricci.get(b, d)).abs() < 1e-9, "({b},{d}) {r} vs {}", c.ricci.get(b, d));
        }
    }
}
