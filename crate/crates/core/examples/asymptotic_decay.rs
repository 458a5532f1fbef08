//! Decay fits on asymptotically flat ends, and the growth bound that rules
//! out logarithmic potentials.
//!
//! `cargo run --release --example asymptotic_decay`

use std::sync::Arc;

use qelab::asymptotics::{decay_chain, directions, fit_decay, growth_bounds_check, EndChart, Quantity};
use qelab::field::{RadialField, RadialProfile};
use qelab::metric::{ConformalFactor, ConformallyFlat};

fn end(f: ConformalFactor, rho: f64) -> qelab::Result<EndChart> {
    EndChart::new(Arc::new(ConformallyFlat::new(f, 3, rho)), rho)
}

fn main() -> qelab::Result<()> {
    let dirs = directions(3, 64);
    for tau in [0.6, 0.8, 1.0] {
        let e = end(ConformalFactor::PowerLaw { amp: 1.0, tau }, 10.0)?;
        let fit = fit_decay(&e, Quantity::B, None, &e.default_radii(12), &dirs)?;
        println!("synthetic tau = {tau}: fitted {:.6}", fit.fit().map_or(f64::NAN, |f| f.tau));
    }

    let e = end(ConformalFactor::Schwarzschild { mass: 1.0 }, 10.0)?;
    let chain = decay_chain(&e, &e.default_radii(12), &dirs)?;
    let slope = |o: &qelab::asymptotics::DecayOutcome| o.fit().map_or(f64::NAN, |f| f.slope);
    println!(
        "schwarzschild: b {:.3}  gamma {:.3}  ric {:.3}  chain {}",
        slope(&chain.b),
        slope(&chain.gamma),
        slope(&chain.ric),
        if chain.pass { "ok" } else { "FAIL" }
    );

    let far = end(ConformalFactor::Flat, 1e10)?;
    for (label, u) in [
        ("|x|", RadialField(RadialProfile::Power { c: 1.0, alpha: 1.0 })),
        ("ln |x|", RadialField(RadialProfile::Log)),
    ] {
        let g = growth_bounds_check(&far, &u, 2.0, 0.0, &far.default_radii(12), &dirs)?;
        println!(
            "u = {label:<7} growth exponent {:.4} vs alpha {:.4}: {}",
            g.exponent,
            g.alpha,
            if g.pass { "ok" } else { "FAIL (lower bound)" }
        );
    }
    Ok(())
}
