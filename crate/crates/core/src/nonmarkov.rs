//! Reduced qubit state and the time-averaged non-Markovianity quantifier.
//!
//! For an initially empty lattice the qubit map is an amplitude-damping
//! channel fixed entirely by `q(t)`; information backflow shows up as rises
//! of `|q(t)|`, and the quantifier is their total, averaged over the horizon.

use num_complex::Complex64 as C64;

use crate::dynamics::DecayTrace;
use crate::error::{Error, Result};

/// A realization is classified Markovian when `N_T` is below this value
/// (in units of `kappa`).
pub const MARKOVIAN_CUTOFF: f64 = 0.002;

/// 2x2 density matrix in the ordered basis `{e, g}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensityMatrix {
    pub ee: C64,
    pub eg: C64,
    pub ge: C64,
    pub gg: C64,
}

impl QubitDensityMatrix {
    pub fn excited() -> Self {
        Self::diagonal(1.0, 0.0)
    }

    pub fn ground() -> Self {
        Self::diagonal(0.0, 1.0)
    }

    pub fn diagonal(p_e: f64, p_g: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        QubitDensityMatrix {
            ee: C64::new(p_e, 0.0),
            eg: z,
            ge: z,
            gg: C64::new(p_g, 0.0),
        }
    }

    /// Pure state `a|e> + b|g>` (normalised here).
    pub fn pure(a: C64, b: C64) -> Self {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n, b / n);
        QubitDensityMatrix {
            ee: a * a.conj(),
            eg: a * b.conj(),
            ge: b * a.conj(),
            gg: b * b.conj(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.ee + self.gg
    }

    /// Largest deviation from `rho = rho^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        (self.eg - self.ge.conj())
            .norm()
            .max(self.ee.im.abs())
            .max(self.gg.im.abs())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.ee.re + self.gg.re);
        let half_gap = 0.5 * (self.ee.re - self.gg.re);
        let off = 0.5 * (self.eg + self.ge.conj());
        let r = (half_gap * half_gap + off.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }

    /// Hermitian, unit trace within `tol`, and eigenvalues in `[-tol, 1 + tol]`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let [lo, hi] = self.eigenvalues();
        self.hermiticity_error() <= tol
            && (self.trace() - 1.0).norm() <= tol
            && lo >= -tol
            && hi <= 1.0 + tol
    }
}

/// Qubit state after tracing out the lattice, given the decay amplitude `q`
/// and the initial qubit state.
pub fn reduced_density_matrix(q: C64, rho0: &QubitDensityMatrix) -> QubitDensityMatrix {
    let pop = q.norm_sqr();
    QubitDensityMatrix {
        ee: pop * rho0.ee,
        eg: q * rho0.eg,
        ge: q.conj() * rho0.ge,
        gg: (1.0 - pop) * rho0.ee + rho0.gg,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NMResult {
    /// `N_T`, in units of the inverse time unit (i.e. of `kappa`).
    pub value: f64,
    /// Maximal runs of consecutive samples over which `|q|` strictly rises.
    pub rise_intervals: Vec<(f64, f64)>,
}

impl NMResult {
    pub fn is_markovian(&self) -> bool {
        self.value < MARKOVIAN_CUTOFF
    }
}

/// Positive variation of `|q(t)|` over the trace, divided by its final time.
pub fn n_quantifier(trace: &DecayTrace) -> Result<NMResult> {
    if trace.len() < 2 {
        return Err(Error::config(
            "trace",
            format!("need at least two samples, got {}", trace.len()),
        ));
    }
    let horizon = trace.final_time();
    if horizon.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::config("trace", "final time must be positive"));
    }
    let mags = trace.magnitudes();
    let mut total = 0.0;
    let mut intervals = Vec::new();
    let mut open: Option<f64> = None;
    for k in 0..mags.len() - 1 {
        let rise = mags[k + 1] - mags[k];
        if rise > 0.0 {
            total += rise;
            open.get_or_insert(trace.times[k]);
        } else if let Some(start) = open.take() {
            intervals.push((start, trace.times[k]));
        }
    }
    if let Some(start) = open {
        intervals.push((start, horizon));
    }
    Ok(NMResult {
        value: total / horizon,
        rise_intervals: intervals,
    })
}
