//! Run configuration: one JSON document per run.
//!
//! Every section and field is optional and falls back to the defaults below
//! (the reference parameters `Delta = 0.2`, `Omega = -1.5`, `phi = 1/4`,
//! clean bath, 60 x 241 lattice, `dt = 0.01`, `T = 50`). Unknown fields are
//! rejected. All energies are in units of `kappa`, times in units of
//! `1/kappa`.
//!
//! ```json
//! {
//!   "lattice":    { "nx": 60, "ny": 241, "kappa": 1.0, "boundary": { "kind": "hard" } },
//!   "flux":       { "p": 1, "q": 4 },
//!   "qubit":      { "coupling": 0.2, "detuning": -1.5 },
//!   "integrator": { "dt": 0.01, "t_final": 50.0, "sample_every": 2 },
//!   "disorder":   { "delta": 0.0, "seed": 0 },
//!   "bands":      { "n_sites": 200, "ky_count": 256, "n_edge": 4, "edge_threshold": 0.5 },
//!   "output":     { "dir": "out" }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorSpec, QubitParams};
use crate::error::{Error, Result};
use crate::lattice::{FluxRational, LatticeSpec};
use crate::spectral::{DEFAULT_EDGE_COLUMNS, DEFAULT_EDGE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderParams {
    pub delta: f64,
    pub seed: u64,
}

impl Default for DisorderParams {
    fn default() -> Self {
        DisorderParams {
            delta: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandParams {
    pub n_sites: usize,
    pub ky_count: usize,
    pub n_edge: usize,
    pub edge_threshold: f64,
}

impl Default for BandParams {
    fn default() -> Self {
        BandParams {
            n_sites: 200,
            ky_count: 256,
            n_edge: DEFAULT_EDGE_COLUMNS,
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputParams {
    pub dir: PathBuf,
}

impl Default for OutputParams {
    fn default() -> Self {
        OutputParams {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub lattice: LatticeSpec,
    pub flux: FluxRational,
    pub qubit: QubitParams,
    pub integrator: IntegratorSpec,
    pub disorder: DisorderParams,
    pub bands: BandParams,
    pub output: OutputParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            lattice: LatticeSpec::default(),
            flux: FluxRational::QUARTER,
            qubit: QubitParams::default(),
            integrator: IntegratorSpec::default(),
            disorder: DisorderParams::default(),
            bands: BandParams::default(),
            output: OutputParams::default(),
        }
    }
}

impl SimConfig {
    /// Checks every component invariant. Does not check the light-cone sizing,
    /// which only matters for time evolution (see [`SimConfig::validate_dynamics`]).
    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.flux.validate()?;
        self.qubit.validate()?;
        self.integrator.validate()?;
        if !(self.disorder.delta.is_finite() && self.disorder.delta >= 0.0) {
            return Err(Error::config("disorder.delta", "must be finite and >= 0"));
        }
        let b = &self.bands;
        if b.n_sites < 8 {
            return Err(Error::config("bands.n_sites", "must be >= 8"));
        }
        if b.ky_count < 16 {
            return Err(Error::config("bands.ky_count", "must be >= 16"));
        }
        if b.n_edge == 0 || 2 * b.n_edge > b.n_sites {
            return Err(Error::config("bands.n_edge", "must satisfy 1 <= n_edge <= n_sites / 2"));
        }
        if !(b.edge_threshold > 0.0 && b.edge_threshold <= 1.0) {
            return Err(Error::config("bands.edge_threshold", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// [`SimConfig::validate`] plus the requirement that no wall reflection
    /// can reach the qubit within the horizon.
    pub fn validate_dynamics(&self) -> Result<()> {
        self.validate()?;
        self.lattice.check_light_cone(self.integrator.t_final)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::config(field, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SimConfig::from_json(&text)
}
