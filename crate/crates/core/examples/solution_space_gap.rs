//! Dimension of the solution space from holonomy defects of the prolonged
//! system, with the singular values that decide it.
//!
//! `cargo run --release --example solution_space_gap`

use qelab::solution_space::{estimate_dimension, DimOptions};
use qelab::zoo::{build, Params};

fn main() -> qelab::Result<()> {
    let cases = [
        ("table1-product", Params::with_m(2.0)),
        ("thm1-ii", Params::with_m(2.0)),
        ("thm1-iii", Params::with_m(2.0)),
        ("thm1-iii", Params::with_m(2.0).a(1.0)),
        ("case2-b", Params::with_m(2.0)),
        ("euclid3", Params::with_m(2.0)),
    ];
    for (name, params) in cases {
        let s = build(name, &params)?;
        let est = estimate_dimension(&s, &DimOptions::default())?;
        let sv: Vec<String> = est.singular_values.iter().map(|v| format!("{v:.1e}")).collect();
        println!(
            "{name:<15} a = {:<4} dim = {} positive = {} gap = {:<9} sigma = [{}]",
            params.a.map_or("-".into(), |a| a.to_string()),
            est.dim_estimate,
            est.positive_count,
            est.gap_ratio.map_or("-".into(), |g| format!("{g:.1e}")),
            sv.join(", ")
        );
    }
    Ok(())
}
