//! In three dimensions the Weyl tensor vanishes, so the full curvature
//! tensor is determined by Ricci. Compares that reconstruction with the
//! directly computed Riemann tensor on every 3D catalog entry.
//!
//! `cargo run --release --example convention_selftest`

use qelab::geometry::{curvature, riemann_from_ricci_3d};
use qelab::tensor::SymTensor2;
use qelab::zoo::{build, list_catalog, Params};

fn main() -> qelab::Result<()> {
    let mut worst: f64 = 0.0;
    for entry in list_catalog().into_iter().filter(|e| e.dim == 3) {
        let s = build(entry.name, &Params::with_m(2.0))?;
        let mut max: f64 = 0.0;
        for x in s.domain.grid(5) {
            let c = curvature(s.provider.as_ref(), &x, true)?;
            let g = SymTensor2::from_matrix(s.provider.metric(&x)?);
            let rec = riemann_from_ricci_3d(&c.ricci, c.scalar, &g)?;
            max = max.max(rec.max_abs_diff(c.riemann.as_ref().expect("requested")));
        }
        worst = worst.max(max);
        println!("{:<20} max |Rm - Rm(Ric)| = {max:.2e}", entry.name);
    }
    println!("worst {worst:.2e}");
    Ok(())
}
