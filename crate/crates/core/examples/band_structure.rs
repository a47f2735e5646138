//! Strip dispersion at quarter flux: bulk gaps, edge branches crossing them,
//! and the matching magnetic subband gaps.
//!
//! `cargo run --release --example band_structure [bands.csv]`

use std::fs::File;

use hallbath::lattice::FluxRational;
use hallbath::spectral::{band_structure, find_gaps, magnetic_subband_gaps, DEFAULT_EDGE_COLUMNS};

fn main() -> hallbath::Result<()> {
    let bands = band_structure(FluxRational::QUARTER, 200, 256, DEFAULT_EDGE_COLUMNS, 1.0)?;
    println!("spectrum [{:.4}, {:.4}]", bands.min_energy(), bands.max_energy());

    let gaps = find_gaps(&bands, 0.5)?;
    for g in &gaps.gaps {
        let signs: Vec<i8> = g.edge_branches.iter().map(|b| b.velocity_sign).collect();
        println!("gap [{:+.4}, {:+.4}]  edge velocity signs {:?}", g.low, g.high, signs);
    }
    for (lo, hi) in magnetic_subband_gaps(FluxRational::QUARTER, 1.0, 64) {
        println!("subband gap [{lo:+.4}, {hi:+.4}] width {:.4}", hi - lo);
    }
    match gaps.containing(-1.5) {
        Some(g) => println!("E = -1.5 sits in [{:+.4}, {:+.4}]", g.low, g.high),
        None => println!("E = -1.5 is in the bulk"),
    }

    if let Some(path) = std::env::args().nth(1) {
        let file = File::create(&path).map_err(|e| hallbath::Error::numerical(e.to_string()))?;
        bands.write_csv(file)?;
        println!("wrote {path}");
    }
    Ok(())
}
