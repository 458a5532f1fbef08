//! Runs the identity suite on a few three-dimensional entries.
//!
//! Pass an entry name to check just that one:
//! `cargo run --release --example verify_identities -- thm1-ii`

use qelab::verifier::{eigenframe, verify_structure, Tolerances, EIGEN_GAP_TOL};
use qelab::zoo::{build, Params};

fn main() -> qelab::Result<()> {
    let names: Vec<String> = match std::env::args().nth(1) {
        Some(n) => vec![n],
        None => vec!["thm1-ii".into(), "thm1-iii".into(), "case2-b".into()],
    };
    for name in &names {
        let params = if name == "thm1-iii" { Params::with_m(2.0).a(1.0) } else { Params::with_m(2.0) };
        let s = build(name, &params)?;
        println!("{} (m = {}, lambda = {})", s.name(), s.m, s.lambda);
        for r in verify_structure(&s, 9, &Tolerances::default(), 0) {
            let flag = if r.pass { "ok" } else { "FAIL" };
            println!("  {flag:<4} {:<10} max {:.2e}  tol {:.0e}", r.identity, r.max, r.tolerance);
        }
        let ef = eigenframe(&s, &s.domain.center(), EIGEN_GAP_TOL)?;
        println!("  Ricci eigenvalues at center: {:?} ({:?})", ef.eigenvalues, ef.degeneracy);
    }
    Ok(())
}
