//! `|q(t)|` is unchanged by a site-dependent gauge transformation that
//! leaves the qubit site's phase alone.

use hallbath::dynamics::{evolve, IntegratorSpec, QubitParams};
use hallbath::lattice::{build_bath_operator, sample_disorder, FluxRational, LatticeSpec};

fn main() -> hallbath::Result<()> {
    let lattice = LatticeSpec::new(20, 41, 1.0);
    let disorder = sample_disorder(1.0, 3, &lattice)?;
    let bath = build_bath_operator(&lattice, FluxRational::QUARTER, &disorder)?;

    let origin = lattice.origin();
    let chi: Vec<f64> = (0..lattice.dim())
        .map(|i| if i == origin { 0.0 } else { (i as f64 * 0.7548776662).fract() * std::f64::consts::TAU })
        .collect();
    let rotated = bath.gauge_transformed(&chi)?;

    let spec = IntegratorSpec::new(0.01, 15.0, 1);
    let qubit = QubitParams::default();
    let a = evolve(&spec, &bath, &qubit)?;
    let b = evolve(&spec, &rotated, &qubit)?;
    let dev = a
        .magnitudes()
        .iter()
        .zip(b.magnitudes())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    println!("max | |q| - |q'| | = {dev:.2e}");
    for r in (0..25).step_by(6) {
        println!("plaquette at site {r}: phase {:?}", bath.plaquette_phase(r));
    }
    Ok(())
}
