//! Seeded disorder ensemble at `delta = kappa` for both fluxes.
//!
//! `cargo run --release --example disorder_ensemble [R] [workers]`

use hallbath::config::SimConfig;
use hallbath::ensemble::{run_ensemble_with_workers, EnsembleSpec};
use hallbath::lattice::FluxRational;

fn main() -> hallbath::Result<()> {
    let mut args = std::env::args().skip(1);
    let r: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(8);
    let workers: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    for flux in [FluxRational::ZERO, FluxRational::QUARTER] {
        let mut config = SimConfig { flux, ..SimConfig::default() };
        config.disorder.delta = 1.0;
        let stats = run_ensemble_with_workers(&EnsembleSpec::new(config, r, 2024), workers)?;
        println!(
            "flux {flux}: mean N_T = {:.3e} +- {:.1e}, Markovian fraction {:.2}, histogram {:?}",
            stats.mean, stats.std, stats.markovian_fraction, stats.histogram.counts
        );
    }
    Ok(())
}
