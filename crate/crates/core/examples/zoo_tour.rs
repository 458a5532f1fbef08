//! Builds every catalog entry and prints its integrability constant.
//!
//! `cargo run --release --example zoo_tour`

use qelab::verifier::mu_stats;
use qelab::zoo::{build, list_catalog, Params};

fn main() -> qelab::Result<()> {
    let params = Params::with_m(2.0);
    println!("{:<20} {:>3} {:>8} {:>18} {:>18} {:>10}", "entry", "n", "lambda", "mu (grid mean)", "mu (expected)", "spread");
    for entry in list_catalog() {
        let s = build(entry.name, &params)?;
        let pts = s.domain.grid(7);
        let st = mu_stats(&s, &pts)?;
        let expected = st.expected.map_or("-".to_string(), |e| format!("{e:.12}"));
        println!(
            "{:<20} {:>3} {:>8.3} {:>18.12} {:>18} {:>10.1e}",
            entry.name, entry.dim, s.lambda, st.mean, expected, st.spread
        );
    }
    Ok(())
}
