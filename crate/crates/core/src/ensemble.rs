//! Seeded disorder ensembles and disorder-strength sweeps.
//!
//! Member `r` of an ensemble draws its disorder field from
//! [`derive_seed`]`(base_seed, r)`. Members are evaluated independently
//! (in parallel when a pool is available) and aggregated by index, so the
//! per-member results are bit-identical for any worker count.

use std::io::Write;

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::dynamics::{evolve, DecayTrace};
use crate::error::{Error, Result};
use crate::lattice::{build_bath_operator, sample_disorder, FluxRational};
use crate::nonmarkov::{n_quantifier, MARKOVIAN_CUTOFF};

/// Number of member traces kept in [`EnsembleStats::traces`].
pub const RETAINED_TRACES: usize = 20;

/// Histogram resolution used by [`run_ensemble`].
pub const HISTOGRAM_BINS: usize = 20;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser applied to `base_seed + r * gamma`. Injective in `r`
/// for a fixed base seed (an odd multiplier followed by a bijective mix).
pub fn derive_seed(base_seed: u64, r: u64) -> u64 {
    let mut z = base_seed.wrapping_add(r.wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    /// Disorder strength is taken from `base_config.disorder.delta`; its seed
    /// is ignored in favour of the derived per-member seeds.
    pub base_config: SimConfig,
    pub n_realizations: usize,
    pub base_seed: u64,
}

impl EnsembleSpec {
    pub fn new(base_config: SimConfig, n_realizations: usize, base_seed: u64) -> Self {
        EnsembleSpec {
            base_config,
            n_realizations,
            base_seed,
        }
    }

    pub fn member_seeds(&self) -> Vec<u64> {
        (0..self.n_realizations as u64)
            .map(|r| derive_seed(self.base_seed, r))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Index of the most populated bin (lowest index on ties).
    pub fn modal_bin(&self) -> usize {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().position(|&c| c == max).unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["bin_lo", "bin_hi", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            wr.write_record(&[
                self.edges[i].to_string(),
                self.edges[i + 1].to_string(),
                c.to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("histogram csv", e))?;
        Ok(())
    }
}

/// Uniform bins on `[lo, hi]`; out-of-range values land in the edge bins.
pub fn histogram(values: &[f64], bin_count: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if bin_count == 0 {
        return Err(Error::config("histogram.bins", "must be >= 1"));
    }
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::config("histogram.range", format!("need lo < hi, got ({lo}, {hi})")));
    }
    let width = (hi - lo) / bin_count as f64;
    let edges = (0..=bin_count).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bin_count];
    for &v in values {
        let idx = ((v - lo) / width).floor();
        let idx = if idx.is_nan() { 0.0 } else { idx.clamp(0.0, (bin_count - 1) as f64) };
        counts[idx as usize] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub seeds: Vec<u64>,
    /// `N_T` per member, in units of `kappa`.
    pub nt_values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (zero for a single member).
    pub std: f64,
    pub histogram: Histogram,
    pub markovian_fraction: f64,
    /// `(member index, trace)` for the first [`RETAINED_TRACES`] members.
    pub traces: Vec<(usize, DecayTrace)>,
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl EnsembleStats {
    fn from_members(seeds: Vec<u64>, members: Vec<(f64, DecayTrace)>, kappa: f64) -> Result<Self> {
        let mut nt_values = Vec::with_capacity(members.len());
        let mut traces = Vec::new();
        for (r, (nt, trace)) in members.into_iter().enumerate() {
            nt_values.push(nt / kappa);
            if r < RETAINED_TRACES {
                traces.push((r, trace));
            }
        }
        let (mean, std) = mean_and_std(&nt_values);
        let top = nt_values.iter().copied().fold(MARKOVIAN_CUTOFF, f64::max);
        let histogram = histogram(&nt_values, HISTOGRAM_BINS, (0.0, top))?;
        let markovian =
            nt_values.iter().filter(|&&v| v < MARKOVIAN_CUTOFF).count() as f64;
        Ok(EnsembleStats {
            markovian_fraction: markovian / nt_values.len() as f64,
            seeds,
            nt_values,
            mean,
            std,
            histogram,
            traces,
        })
    }

    /// CSV with columns `r, derived_seed, NT_over_kappa`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "derived_seed", "NT_over_kappa"])?;
        for (r, (seed, nt)) in self.seeds.iter().zip(&self.nt_values).enumerate() {
            wr.write_record(&[r.to_string(), seed.to_string(), nt.to_string()])?;
        }
        wr.flush().map_err(|e| Error::io("ensemble csv", e))?;
        Ok(())
    }

    /// Long-format CSV of the retained traces: `r, t_kappa, pop`.
    pub fn write_traces_csv<W: Write>(&self, w: W, kappa: f64) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["r", "t_kappa", "pop"])?;
        for (r, trace) in &self.traces {
            for (t, q) in trace.times.iter().zip(&trace.q) {
                wr.write_record(&[
                    r.to_string(),
                    (t * kappa).to_string(),
                    q.norm_sqr().to_string(),
                ])?;
            }
        }
        wr.flush().map_err(|e| Error::io("trace csv", e))?;
        Ok(())
    }
}

fn run_member(config: &SimConfig, seed: u64) -> Result<(f64, DecayTrace)> {
    let disorder = sample_disorder(config.disorder.delta, seed, &config.lattice)?;
    let bath = build_bath_operator(&config.lattice, config.flux, &disorder)?;
    let trace = evolve(&config.integrator, &bath, &config.qubit)?;
    let nt = n_quantifier(&trace)?.value;
    Ok((nt, trace))
}

/// Runs every member on the current rayon pool.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats> {
    let config = &spec.base_config;
    config.validate()?;
    if spec.n_realizations == 0 {
        return Err(Error::config("ensemble.realizations", "must be >= 1"));
    }
    let seeds = spec.member_seeds();
    let wrap = |r: usize, seed: u64| {
        move |e: Error| Error::Member {
            index: r,
            seed,
            source: Box::new(e),
        }
    };

    let members: Vec<(f64, DecayTrace)> = if config.disorder.delta == 0.0 {
        // Without disorder every member sees the same bath.
        let clean = run_member(config, seeds[0]).map_err(wrap(0, seeds[0]))?;
        vec![clean; spec.n_realizations]
    } else {
        seeds
            .par_iter()
            .enumerate()
            .map(|(r, &seed)| run_member(config, seed).map_err(wrap(r, seed)))
            .collect::<Result<_>>()?
    };
    EnsembleStats::from_members(seeds, members, config.lattice.kappa)
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::numerical(format!("cannot start worker pool: {e}")))?;
    pool.install(job)
}

/// [`run_ensemble`] on a dedicated pool of `workers` threads. The worker
/// count affects wall-clock time only.
pub fn run_ensemble_with_workers(spec: &EnsembleSpec, workers: usize) -> Result<EnsembleStats> {
    with_workers(workers, || run_ensemble(spec))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub flux: FluxRational,
    pub mean: f64,
    pub std: f64,
    pub realizations: usize,
    pub markovian_fraction: f64,
}

/// Fluxes compared by a default sweep: trivial and quarter flux.
pub const SWEEP_FLUXES: [FluxRational; 2] = [FluxRational::ZERO, FluxRational::QUARTER];

/// Mean `N_T` per `(delta, flux)` point. Every point reuses the base seed, so
/// member `r` sees the same disorder pattern (scaled by `delta`) at every
/// flux and strength.
pub fn sweep_disorder(
    base: &EnsembleSpec,
    deltas: &[f64],
    realizations_per_point: usize,
    fluxes: &[FluxRational],
) -> Result<Vec<SweepRow>> {
    if deltas.is_empty() {
        return Err(Error::config("sweep.deltas", "must not be empty"));
    }
    if let Some(bad) = deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::config("sweep.deltas", format!("{bad} is not a valid strength")));
    }
    let mut rows = Vec::with_capacity(deltas.len() * fluxes.len());
    for &delta in deltas {
        for &flux in fluxes {
            let mut config = base.base_config.clone();
            config.disorder.delta = delta;
            config.flux = flux;
            let spec = EnsembleSpec::new(config, realizations_per_point, base.base_seed);
            let stats = run_ensemble(&spec)?;
            rows.push(SweepRow {
                delta,
                flux,
                mean: stats.mean,
                std: stats.std,
                realizations: realizations_per_point,
                markovian_fraction: stats.markovian_fraction,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_disorder_with_workers(
    base: &EnsembleSpec,
    deltas: &[f64],
    realizations_per_point: usize,
    fluxes: &[FluxRational],
    workers: usize,
) -> Result<Vec<SweepRow>> {
    with_workers(workers, || sweep_disorder(base, deltas, realizations_per_point, fluxes))
}

/// CSV with columns `delta_over_kappa, flux_p, flux_q, mean_NT_over_kappa, std, R`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], kappa: f64, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["delta_over_kappa", "flux_p", "flux_q", "mean_NT_over_kappa", "std", "R"])?;
    for row in rows {
        wr.write_record(&[
            (row.delta / kappa).to_string(),
            row.flux.p().to_string(),
            row.flux.q().to_string(),
            row.mean.to_string(),
            row.std.to_string(),
            row.realizations.to_string(),
        ])?;
    }
    wr.flush().map_err(|e| Error::io("sweep csv", e))?;
    Ok(())
}
