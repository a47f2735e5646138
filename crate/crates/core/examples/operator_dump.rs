//! Builds a small disordered bath, checks Hermiticity against its dense form
//! and prints the coordinate dump.

use hallbath::lattice::{build_bath_operator, sample_disorder, FluxRational, LatticeSpec};

fn main() -> hallbath::Result<()> {
    let lattice = LatticeSpec::new(3, 3, 1.0);
    let bath = build_bath_operator(&lattice, FluxRational::QUARTER, &sample_disorder(0.5, 1, &lattice)?)?;
    let h = bath.to_dense();
    let herm = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("dim {} | nonzeros {} | max |H - H^dagger| = {herm:.1e}", bath.dim(), bath.triplets().len());
    bath.write_coordinate(std::io::stdout().lock())
        .map_err(|e| hallbath::Error::numerical(e.to_string()))
}
