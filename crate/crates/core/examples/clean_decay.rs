//! Decay into the clean lattice at zero and quarter flux.
//!
//! The quarter-flux qubit sits in a gap and only couples to the chiral edge
//! branch, so it decays more slowly than into the trivial band.

use hallbath::dynamics::{evolve, fit_decay_rate, IntegratorSpec, QubitParams};
use hallbath::lattice::{build_bath_operator, DisorderRealization, FluxRational, LatticeSpec};
use hallbath::nonmarkov::n_quantifier;

fn main() -> hallbath::Result<()> {
    let lattice = LatticeSpec::default();
    let integrator = IntegratorSpec::default();
    let qubit = QubitParams::new(0.2, -1.5);
    lattice.check_light_cone(integrator.t_final)?;

    for flux in [FluxRational::ZERO, FluxRational::QUARTER] {
        let bath = build_bath_operator(&lattice, flux, &DisorderRealization::clean(&lattice))?;
        let trace = evolve(&integrator, &bath, &qubit)?;
        let rate = fit_decay_rate(&trace, (5.0, 40.0))?;
        let nt = n_quantifier(&trace)?;
        let pop = trace.populations();
        println!(
            "flux {flux}: |q(T)|^2 = {:.4}, rate = {rate:.4}, N_T = {:.2e}, norm drift = {:.1e}",
            pop[pop.len() - 1],
            nt.value,
            trace.max_norm_deviation()
        );
    }
    Ok(())
}
