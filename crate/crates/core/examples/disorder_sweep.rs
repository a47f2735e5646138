//! Mean `N_T` against disorder strength on a reduced lattice, paired seeds
//! across fluxes.

use hallbath::config::SimConfig;
use hallbath::dynamics::IntegratorSpec;
use hallbath::ensemble::{sweep_disorder, write_sweep_csv, EnsembleSpec, SWEEP_FLUXES};
use hallbath::lattice::LatticeSpec;

fn main() -> hallbath::Result<()> {
    let config = SimConfig {
        lattice: LatticeSpec::new(30, 61, 1.0),
        integrator: IntegratorSpec::new(0.01, 25.0, 2),
        ..SimConfig::default()
    };
    let base = EnsembleSpec::new(config, 4, 7);
    let rows = sweep_disorder(&base, &[0.0, 1.0, 2.0, 5.0], 4, &SWEEP_FLUXES)?;
    write_sweep_csv(&rows, 1.0, std::io::stdout())?;
    Ok(())
}
