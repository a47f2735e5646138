//! Reduced qubit state along a decay trace for a superposition input.

use hallbath::dynamics::{evolve, IntegratorSpec, QubitParams};
use hallbath::lattice::{build_bath_operator, DisorderRealization, FluxRational, LatticeSpec};
use hallbath::nonmarkov::{reduced_density_matrix, QubitDensityMatrix};
use num_complex::Complex64 as C64;

fn main() -> hallbath::Result<()> {
    let lattice = LatticeSpec::new(30, 61, 1.0);
    let bath = build_bath_operator(&lattice, FluxRational::QUARTER, &DisorderRealization::clean(&lattice))?;
    let trace = evolve(&IntegratorSpec::new(0.01, 25.0, 250), &bath, &QubitParams::default())?;

    let rho0 = QubitDensityMatrix::pure(C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    for (t, q) in trace.times.iter().zip(&trace.q) {
        let rho = reduced_density_matrix(*q, &rho0);
        let [lo, hi] = rho.eigenvalues();
        println!(
            "t = {t:5.1}  rho_ee = {:.4}  |rho_eg| = {:.4}  eigenvalues ({lo:.4}, {hi:.4})  valid = {}",
            rho.ee.re,
            rho.eg.norm(),
            rho.is_valid(1e-12)
        );
    }
    Ok(())
}
