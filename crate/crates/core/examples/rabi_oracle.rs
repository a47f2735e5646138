//! A one-site bath turns the decay into vacuum Rabi oscillation,
//! `|q(t)|^2 = cos^2(Delta t)` on resonance.

use hallbath::dynamics::{evolve, IntegratorSpec, QubitParams};
use hallbath::lattice::{build_bath_operator, DisorderRealization, FluxRational, LatticeSpec};
use hallbath::nonmarkov::n_quantifier;

fn main() -> hallbath::Result<()> {
    let site = LatticeSpec::new(1, 1, 1.0);
    let bath = build_bath_operator(&site, FluxRational::ZERO, &DisorderRealization::clean(&site))?;
    let coupling = 0.2;
    let trace = evolve(&IntegratorSpec::new(0.01, 50.0, 1), &bath, &QubitParams::new(coupling, 0.0))?;

    let err = trace
        .times
        .iter()
        .zip(trace.populations())
        .map(|(t, p)| (p - (coupling * t).cos().powi(2)).abs())
        .fold(0.0, f64::max);
    println!("max | |q|^2 - cos^2(Delta t) | = {err:.2e}");
    // every revival is information flowing back from the bath
    println!("N_T = {:.4}", n_quantifier(&trace)?.value);
    Ok(())
}
