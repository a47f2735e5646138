//! Strip spectrum of the clean bath.
//!
//! Translation invariance along `m` reduces the clean bath to the
//! one-dimensional Harper equation on the half-line `n >= 0`,
//!
//! ```text
//! k (A[n+1] + A[n-1]) + 2 k cos(2 pi phi n + ky) A[n] = E(ky) A[n],   A[-1] = 0,
//! ```
//!
//! truncated to `N` columns. Eigenstates are classified as edge states by the
//! weight they carry in the first few columns, and bulk gaps are read off the
//! energies of the remaining states.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::FluxRational;

/// Smallest bulk-free interval reported as a gap, in units of `kappa`.
pub const MIN_GAP_WIDTH: f64 = 0.05;

/// Columns counted as "edge" when computing edge weights.
pub const DEFAULT_EDGE_COLUMNS: usize = 4;

/// Edge weight at or above which a state counts as an edge state.
pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.5;

/// Clean-lattice dispersion at zero flux, `2k cos kx + 2k cos ky`.
pub fn dispersion_phi0(kx: f64, ky: f64, kappa: f64) -> f64 {
    2.0 * kappa * kx.cos() + 2.0 * kappa * ky.cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripProblem {
    pub ky: f64,
    pub flux: FluxRational,
    pub n_sites: usize,
    pub kappa: f64,
}

impl StripProblem {
    pub fn new(ky: f64, flux: FluxRational, n_sites: usize, kappa: f64) -> Self {
        StripProblem {
            ky,
            flux,
            n_sites,
            kappa,
        }
    }

    /// Diagonal and off-diagonal of the tridiagonal strip matrix.
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let diag = (0..self.n_sites)
            .map(|n| 2.0 * self.kappa * (self.flux.column_phase(n) + self.ky).cos())
            .collect();
        let off = vec![self.kappa; self.n_sites.saturating_sub(1)];
        (diag, off)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let (d, e) = self.tridiagonal();
        let n = self.n_sites;
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i.abs_diff(j) == 1 {
                e[i.min(j)]
            } else {
                0.0
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct StripSolution {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the normalised eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
}

pub fn solve_strip(problem: &StripProblem) -> Result<StripSolution> {
    if problem.n_sites == 0 {
        return Err(Error::config("spectral.n_sites", "must be >= 1"));
    }
    if !(problem.kappa.is_finite() && problem.kappa > 0.0) || !problem.ky.is_finite() {
        return Err(Error::config("spectral", "kappa and ky must be finite, kappa > 0"));
    }
    let eig = SymmetricEigen::new(problem.matrix());
    let mut order: Vec<usize> = (0..problem.n_sites).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if eigenvalues.iter().any(|e| !e.is_finite()) {
        return Err(Error::numerical("strip eigensolver returned non-finite values"));
    }
    let eigenvectors = DMatrix::from_fn(problem.n_sites, problem.n_sites, |i, k| {
        eig.eigenvectors[(i, order[k])]
    });
    Ok(StripSolution {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone)]
pub struct BandStructure {
    pub flux: FluxRational,
    pub kappa: f64,
    pub n_sites: usize,
    pub n_edge: usize,
    /// Uniform samples of `[-pi, pi)`.
    pub ky_grid: Vec<f64>,
    /// `energies[i]` is the sorted spectrum at `ky_grid[i]`.
    pub energies: Vec<Vec<f64>>,
    /// Squared norm in columns `n < n_edge` (the qubit edge).
    pub edge_weights: Vec<Vec<f64>>,
    /// Squared norm in the last `n_edge` columns (the truncation edge).
    pub far_weights: Vec<Vec<f64>>,
}

pub fn ky_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| -PI + 2.0 * PI * i as f64 / count as f64)
        .collect()
}

pub fn band_structure(
    flux: FluxRational,
    n_sites: usize,
    ky_count: usize,
    n_edge: usize,
    kappa: f64,
) -> Result<BandStructure> {
    if n_sites < 8 {
        return Err(Error::config("spectral.n_sites", "must be >= 8"));
    }
    if ky_count < 16 {
        return Err(Error::config("spectral.ky_count", "must be >= 16"));
    }
    if n_edge == 0 || 2 * n_edge > n_sites {
        return Err(Error::config(
            "spectral.n_edge",
            "must satisfy 1 <= n_edge <= n_sites / 2",
        ));
    }
    let grid = ky_grid(ky_count);
    let solved: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = grid
        .par_iter()
        .map(|&ky| {
            let sol = solve_strip(&StripProblem::new(ky, flux, n_sites, kappa))?;
            let weight = |rows: std::ops::Range<usize>| -> Vec<f64> {
                (0..n_sites)
                    .map(|k| rows.clone().map(|i| sol.eigenvectors[(i, k)].powi(2)).sum())
                    .collect()
            };
            let near = weight(0..n_edge);
            let far = weight(n_sites - n_edge..n_sites);
            Ok((sol.eigenvalues, near, far))
        })
        .collect::<Result<_>>()?;

    let mut energies = Vec::with_capacity(ky_count);
    let mut edge_weights = Vec::with_capacity(ky_count);
    let mut far_weights = Vec::with_capacity(ky_count);
    for (e, w, f) in solved {
        energies.push(e);
        edge_weights.push(w);
        far_weights.push(f);
    }
    Ok(BandStructure {
        flux,
        kappa,
        n_sites,
        n_edge,
        ky_grid: grid,
        energies,
        edge_weights,
        far_weights,
    })
}

impl BandStructure {
    pub fn min_energy(&self) -> f64 {
        self.energies
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_energy(&self) -> f64 {
        self.energies
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Energies of states localised at neither end of the strip.
    pub fn bulk_energies(&self, edge_threshold: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.ky_grid.len() {
            for k in 0..self.n_sites {
                if self.edge_weights[i][k] < edge_threshold
                    && self.far_weights[i][k] < edge_threshold
                {
                    out.push(self.energies[i][k]);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// CSV with one row per `(ky, band)`: `ky, band, E_over_kappa, edge_weight`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["ky", "band", "E_over_kappa", "edge_weight"])?;
        for (i, ky) in self.ky_grid.iter().enumerate() {
            for k in 0..self.n_sites {
                wr.write_record(&[
                    ky.to_string(),
                    k.to_string(),
                    (self.energies[i][k] / self.kappa).to_string(),
                    self.edge_weights[i][k].to_string(),
                ])?;
            }
        }
        wr.flush().map_err(|e| Error::io("band csv", e))?;
        Ok(())
    }
}

/// A chain of edge-state energies followed across neighbouring `ky` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBranch {
    /// `(ky, E)` points in grid order (may wrap through `ky = pi`).
    pub points: Vec<(f64, f64)>,
    /// `+1` or `-1` when every finite-difference slope along the branch has
    /// that sign, `0` otherwise.
    pub velocity_sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub low: f64,
    pub high: f64,
    /// Branches localised on the `n = 0` edge with energies inside the gap.
    pub edge_branches: Vec<EdgeBranch>,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.low < energy && energy < self.high
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapCatalog {
    pub gaps: Vec<Gap>,
}

impl GapCatalog {
    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn containing(&self, energy: f64) -> Option<&Gap> {
        self.gaps.iter().find(|g| g.contains(energy))
    }
}

/// Bulk-free energy intervals wider than [`MIN_GAP_WIDTH`] and the `n = 0`
/// edge branches that cross them.
pub fn find_gaps(bands: &BandStructure, edge_threshold: f64) -> Result<GapCatalog> {
    if bands.ky_grid.is_empty() {
        return Err(Error::config("bands", "band structure is empty"));
    }
    let bulk = bands.bulk_energies(edge_threshold);
    let min_width = MIN_GAP_WIDTH * bands.kappa;
    let mut gaps = Vec::new();
    for w in bulk.windows(2) {
        if w[1] - w[0] > min_width {
            let (low, high) = (w[0], w[1]);
            let edge_branches = follow_edge_branches(bands, edge_threshold, low, high);
            gaps.push(Gap {
                low,
                high,
                edge_branches,
            });
        }
    }
    Ok(GapCatalog { gaps })
}

fn follow_edge_branches(
    bands: &BandStructure,
    edge_threshold: f64,
    low: f64,
    high: f64,
) -> Vec<EdgeBranch> {
    let count = bands.ky_grid.len();
    let dk = 2.0 * PI / count as f64;
    // |dE/dky| <= 2 kappa, so a continuation step moves E by at most ~2 kappa dk.
    let max_jump = 4.0 * bands.kappa * dk;

    let points: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            (0..bands.n_sites)
                .filter(|&k| bands.edge_weights[i][k] >= edge_threshold)
                .map(|k| bands.energies[i][k])
                .filter(|&e| e > low && e < high)
                .collect()
        })
        .collect();

    // chains of (grid index, energy)
    let mut chains: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    for (i, energies) in points.iter().enumerate() {
        let mut next_open = Vec::new();
        let mut taken = vec![false; energies.len()];
        for &c in &open {
            let last = chains[c].last().unwrap().1;
            let best = energies
                .iter()
                .enumerate()
                .filter(|(j, _)| !taken[*j])
                .map(|(j, &e)| (j, (e - last).abs()))
                .filter(|&(_, d)| d <= max_jump)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, _)) = best {
                taken[j] = true;
                chains[c].push((i, energies[j]));
                next_open.push(c);
            }
        }
        for (j, &e) in energies.iter().enumerate() {
            if !taken[j] {
                chains.push(vec![(i, e)]);
                next_open.push(chains.len() - 1);
            }
        }
        open = next_open;
    }

    // Join chains that run off the end of the grid onto ones starting at ky = -pi.
    let mut merged = vec![false; chains.len()];
    for a in 0..chains.len() {
        if merged[a] || chains[a].last().unwrap().0 != count - 1 {
            continue;
        }
        let tail = chains[a].last().unwrap().1;
        let partner = (0..chains.len())
            .filter(|&b| b != a && !merged[b] && chains[b][0].0 == 0)
            .map(|b| (b, (chains[b][0].1 - tail).abs()))
            .filter(|&(_, d)| d <= max_jump)
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((b, _)) = partner {
            let head = std::mem::take(&mut chains[b]);
            chains[a].extend(head);
            merged[b] = true;
        }
    }

    chains
        .into_iter()
        .zip(merged)
        .filter(|(c, m)| !m && c.len() >= 3)
        .map(|(c, _)| {
            let slopes: Vec<f64> = (1..c.len() - 1)
                .map(|j| (c[j + 1].1 - c[j - 1].1) / (2.0 * dk))
                .collect();
            let velocity_sign = if slopes.iter().all(|&s| s > 0.0) {
                1
            } else if slopes.iter().all(|&s| s < 0.0) {
                -1
            } else {
                0
            };
            EdgeBranch {
                points: c.iter().map(|&(i, e)| (bands.ky_grid[i], e)).collect(),
                velocity_sign,
            }
        })
        .collect()
}

/// Gaps between consecutive magnetic subbands of the infinite lattice at
/// flux `p/q`, from the `q x q` magnetic Bloch Hamiltonian sampled on a
/// `k_count x k_count` grid. Returns `q - 1` intervals `(top of band r,
/// bottom of band r + 1)`; a non-positive width means the bands touch or
/// overlap.
pub fn magnetic_subband_gaps(flux: FluxRational, kappa: f64, k_count: usize) -> Vec<(f64, f64)> {
    let q = flux.q() as usize;
    let mut lows = vec![f64::INFINITY; q];
    let mut highs = vec![f64::NEG_INFINITY; q];
    for a in 0..k_count {
        let theta = -PI + 2.0 * PI * a as f64 / k_count as f64;
        for b in 0..k_count {
            let ky = -PI + 2.0 * PI * b as f64 / k_count as f64;
            let mut h = DMatrix::<C64>::zeros(q, q);
            for n in 0..q {
                h[(n, n)] += C64::new(2.0 * kappa * (flux.column_phase(n) + ky).cos(), 0.0);
                let hop = if n + 1 == q {
                    C64::from_polar(kappa, theta)
                } else {
                    C64::new(kappa, 0.0)
                };
                let m = (n + 1) % q;
                h[(n, m)] += hop;
                h[(m, n)] += hop.conj();
            }
            let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
            e.sort_by(f64::total_cmp);
            for r in 0..q {
                lows[r] = lows[r].min(e[r]);
                highs[r] = highs[r].max(e[r]);
            }
        }
    }
    (0..q.saturating_sub(1)).map(|r| (highs[r], lows[r + 1])).collect()
}
