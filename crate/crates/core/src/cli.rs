//! Subcommands `bands`, `decay`, `ensemble` and `sweep`.
//!
//! Each command writes its CSV outputs plus a `manifest.json` into the
//! configured output directory and returns a report whose `summary` is what
//! the binary prints.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{parse_config, SimConfig};
use crate::dynamics::{evolve, fit_decay_rate, DecayTrace};
use crate::ensemble::{
    run_ensemble, sweep_disorder, write_sweep_csv, EnsembleSpec, EnsembleStats, SweepRow,
    SWEEP_FLUXES,
};
use crate::error::{Error, Result};
use crate::lattice::{build_bath_operator, sample_disorder, FluxRational};
use crate::manifest::RunManifest;
use crate::nonmarkov::{n_quantifier, NMResult, MARKOVIAN_CUTOFF};
use crate::spectral::{
    band_structure, find_gaps, magnetic_subband_gaps, BandStructure, GapCatalog, MIN_GAP_WIDTH,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const DEFAULT_SWEEP_DELTAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];

/// Resolution of the magnetic Bloch grid used in the gap report.
const SUBBAND_GRID: usize = 64;

pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        EXIT_CONFIG
    } else if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_OTHER
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(mut manifest: RunManifest, dir: &Path, started: Instant, files: &[&str]) -> Result<RunManifest> {
    for name in files {
        manifest.record(dir, name)?;
    }
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.write(dir)?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct BandsReport {
    pub bands: BandStructure,
    pub gaps: GapCatalog,
    /// Gaps between the `q` magnetic subbands of the infinite lattice.
    pub subband_gaps: Vec<(f64, f64)>,
    /// Whether the qubit detuning falls inside a strip gap crossed by an
    /// `n = 0` edge branch.
    pub detuning_in_edge_gap: bool,
    pub summary: String,
    pub manifest: RunManifest,
}

impl BandsReport {
    pub fn wide_subband_gaps(&self) -> usize {
        let min = MIN_GAP_WIDTH * self.bands.kappa;
        self.subband_gaps.iter().filter(|(lo, hi)| hi - lo > min).count()
    }
}

fn gap_report(
    bands: &BandStructure,
    gaps: &GapCatalog,
    subband_gaps: &[(f64, f64)],
    detuning: f64,
) -> (String, bool) {
    let k = bands.kappa;
    let min = MIN_GAP_WIDTH * k;
    let mut s = String::new();
    let _ = writeln!(s, "flux {} | strip N = {} | {} ky points", bands.flux, bands.n_sites, bands.ky_grid.len());
    let _ = writeln!(s, "spectrum [{:.6}, {:.6}] kappa", bands.min_energy() / k, bands.max_energy() / k);
    let wide = subband_gaps.iter().filter(|(lo, hi)| hi - lo > min).count();
    if gaps.is_empty() && wide == 0 {
        let _ = writeln!(s, "no gaps");
    } else {
        let _ = writeln!(s, "magnetic subband gaps: {} ({} wider than {} kappa)", subband_gaps.len(), wide, MIN_GAP_WIDTH);
        for (lo, hi) in subband_gaps {
            let _ = writeln!(s, "  [{:+.6}, {:+.6}] width {:.6}", lo / k, hi / k, (hi - lo) / k);
        }
        let _ = writeln!(s, "bulk strip gaps wider than {} kappa: {}", MIN_GAP_WIDTH, gaps.len());
        for g in &gaps.gaps {
            let signs: Vec<String> = g.edge_branches.iter().map(|b| format!("{:+}", b.velocity_sign)).collect();
            let _ = writeln!(
                s,
                "  [{:+.6}, {:+.6}] width {:.6}, n=0 edge branches: {} (velocity signs [{}])",
                g.low / k,
                g.high / k,
                g.width() / k,
                g.edge_branches.len(),
                signs.join(", ")
            );
        }
    }
    let hosting = gaps
        .containing(detuning)
        .filter(|g| !g.edge_branches.is_empty());
    match (gaps.containing(detuning), hosting) {
        (_, Some(g)) => {
            let _ = writeln!(
                s,
                "Omega = {:+.3} kappa lies in gap [{:+.6}, {:+.6}] hosting an n=0 edge branch",
                detuning / k,
                g.low / k,
                g.high / k
            );
        }
        (Some(_), None) => {
            let _ = writeln!(s, "Omega = {:+.3} kappa lies in a gap without an n=0 edge branch", detuning / k);
        }
        (None, _) => {
            let _ = writeln!(s, "Omega = {:+.3} kappa lies in the bulk continuum", detuning / k);
        }
    }
    (s, hosting.is_some())
}

/// Strip dispersion (`bands.csv`) and gap report (`gaps.txt`).
pub fn cmd_bands(config: &SimConfig) -> Result<BandsReport> {
    config.validate()?;
    let started = Instant::now();
    let dir = &config.output.dir;
    create_dir(dir)?;
    let b = &config.bands;
    let kappa = config.lattice.kappa;
    let bands = band_structure(config.flux, b.n_sites, b.ky_count, b.n_edge, kappa)?;
    let gaps = find_gaps(&bands, b.edge_threshold)?;
    let subband_gaps = magnetic_subband_gaps(config.flux, kappa, SUBBAND_GRID);
    let (summary, detuning_in_edge_gap) = gap_report(&bands, &gaps, &subband_gaps, config.qubit.detuning);

    bands.write_csv(create_file(dir, "bands.csv")?)?;
    fs::write(dir.join("gaps.txt"), &summary).map_err(|e| Error::io(dir.join("gaps.txt"), e))?;
    let manifest = RunManifest::new("bands", json!({}), config);
    let manifest = finish(manifest, dir, started, &["bands.csv", "gaps.txt"])?;
    Ok(BandsReport {
        bands,
        gaps,
        subband_gaps,
        detuning_in_edge_gap,
        summary,
        manifest,
    })
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub trace: DecayTrace,
    pub nm: NMResult,
    /// Exponential rate fitted over the middle of the horizon, when defined.
    pub fitted_rate: Option<f64>,
    pub summary: String,
    pub manifest: RunManifest,
}

/// Single evolution (`trace.csv`). With `dump_operator`, also writes the bath
/// operator in coordinate form (`operator.txt`: `row col re im` per entry).
pub fn cmd_decay(config: &SimConfig, dump_operator: bool) -> Result<DecayReport> {
    config.validate_dynamics()?;
    let started = Instant::now();
    let dir = &config.output.dir;
    create_dir(dir)?;
    let disorder = sample_disorder(config.disorder.delta, config.disorder.seed, &config.lattice)?;
    let bath = build_bath_operator(&config.lattice, config.flux, &disorder)?;
    let trace = evolve(&config.integrator, &bath, &config.qubit)?;
    let nm = n_quantifier(&trace)?;
    let t = trace.final_time();
    let fitted_rate = fit_decay_rate(&trace, (0.1 * t, 0.8 * t)).ok();

    let kappa = config.lattice.kappa;
    trace.write_csv(create_file(dir, "trace.csv")?, kappa)?;
    let mut files = vec!["trace.csv"];
    if dump_operator {
        let path = dir.join("operator.txt");
        bath.write_coordinate(create_file(dir, "operator.txt")?)
            .map_err(|e| Error::io(path, e))?;
        files.push("operator.txt");
    }

    let pops = trace.populations();
    let mut summary = String::new();
    let _ = writeln!(summary, "flux {} | delta {} kappa | seed {}", config.flux, config.disorder.delta / kappa, config.disorder.seed);
    let _ = writeln!(summary, "samples {} | T = {} / kappa", trace.len(), t * kappa);
    let _ = writeln!(summary, "final |q|^2 = {:.6e}", pops.last().copied().unwrap_or(f64::NAN));
    if let Some(rate) = fitted_rate {
        let _ = writeln!(summary, "fitted decay rate = {:.6e} kappa", rate / kappa);
    }
    let _ = writeln!(summary, "max norm deviation = {:.3e}", trace.max_norm_deviation());
    let _ = writeln!(
        summary,
        "N_T = {:.6e} kappa ({})",
        nm.value / kappa,
        if nm.is_markovian() { "Markovian" } else { "non-Markovian" }
    );

    let manifest = RunManifest::new("decay", json!({ "dump_operator": dump_operator }), config);
    let manifest = finish(manifest, dir, started, &files)?;
    Ok(DecayReport {
        trace,
        nm,
        fitted_rate,
        summary,
        manifest,
    })
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub stats: EnsembleStats,
    pub summary: String,
    pub manifest: RunManifest,
}

/// `R` seeded realizations at the configured disorder strength
/// (`ensemble.csv`, `histogram.csv`, `traces.csv`).
pub fn cmd_ensemble(config: &SimConfig, realizations: usize, base_seed: u64) -> Result<EnsembleReport> {
    config.validate_dynamics()?;
    let started = Instant::now();
    let dir = &config.output.dir;
    create_dir(dir)?;
    let spec = EnsembleSpec::new(config.clone(), realizations, base_seed);
    let stats = run_ensemble(&spec)?;
    let kappa = config.lattice.kappa;
    stats.write_csv(create_file(dir, "ensemble.csv")?)?;
    stats.histogram.write_csv(create_file(dir, "histogram.csv")?)?;
    stats.write_traces_csv(create_file(dir, "traces.csv")?, kappa)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "flux {} | delta {} kappa | R = {} | base seed {}", config.flux, config.disorder.delta / kappa, realizations, base_seed);
    let _ = writeln!(summary, "mean N_T = {:.6e} kappa, std {:.6e}", stats.mean, stats.std);
    let _ = writeln!(
        summary,
        "Markovian fraction (N_T < {} kappa) = {:.3}",
        MARKOVIAN_CUTOFF, stats.markovian_fraction
    );
    let _ = writeln!(summary, "modal histogram bin = {}", stats.histogram.modal_bin());

    let params = json!({ "realizations": realizations, "base_seed": base_seed });
    let manifest = RunManifest::new("ensemble", params, config);
    let manifest = finish(manifest, dir, started, &["ensemble.csv", "histogram.csv", "traces.csv"])?;
    Ok(EnsembleReport {
        stats,
        summary,
        manifest,
    })
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: String,
    pub manifest: RunManifest,
}

/// Mean `N_T` against disorder strength for fluxes 0 and 1/4 (`sweep.csv`).
/// The configured flux is ignored.
pub fn cmd_sweep(config: &SimConfig, deltas: &[f64], realizations: usize, base_seed: u64) -> Result<SweepReport> {
    config.validate_dynamics()?;
    let started = Instant::now();
    let dir = &config.output.dir;
    create_dir(dir)?;
    let base = EnsembleSpec::new(config.clone(), realizations, base_seed);
    let rows = sweep_disorder(&base, deltas, realizations, &SWEEP_FLUXES)?;
    let kappa = config.lattice.kappa;
    write_sweep_csv(&rows, kappa, create_file(dir, "sweep.csv")?)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "R = {} per point | base seed {}", realizations, base_seed);
    let _ = writeln!(summary, "{:>8} {:>6} {:>14} {:>14}", "delta", "flux", "mean N_T", "std");
    for r in &rows {
        let _ = writeln!(summary, "{:>8} {:>6} {:>14.6e} {:>14.6e}", r.delta / kappa, r.flux.to_string(), r.mean, r.std);
    }

    let params = json!({ "deltas": deltas, "realizations": realizations, "base_seed": base_seed });
    let manifest = RunManifest::new("sweep", params, config);
    let manifest = finish(manifest, dir, started, &["sweep.csv"])?;
    Ok(SweepReport {
        rows,
        summary,
        manifest,
    })
}

pub fn parse_flux(text: &str) -> std::result::Result<FluxRational, String> {
    let (p, q) = match text.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (text.trim(), "1"),
    };
    let p: i64 = p.parse().map_err(|_| format!("bad numerator in `{text}`"))?;
    let q: i64 = q.parse().map_err(|_| format!("bad denominator in `{text}`"))?;
    FluxRational::new(p, q).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "hallbath", version, about = "Qubit decay into a disordered Harper-Hofstadter lattice")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; each overrides the matching config field.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration (defaults are used for missing fields).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Disorder seed for `decay`, base seed for `ensemble` and `sweep`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages. Affects speed only.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Flux per plaquette as `p/q`.
    #[arg(long, global = true, value_parser = parse_flux)]
    pub flux: Option<FluxRational>,
    /// Disorder strength delta / kappa.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Qubit coupling Delta / kappa.
    #[arg(long, global = true)]
    pub coupling: Option<f64>,
    /// Qubit detuning Omega / kappa.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_final: Option<f64>,
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    #[arg(long, global = true)]
    pub ny: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strip band structure and gap report.
    Bands,
    /// Single decay trace and its non-Markovianity.
    Decay {
        /// Also write the bath operator as coordinate triplets.
        #[arg(long)]
        dump_operator: bool,
    },
    /// Disorder ensemble at the configured strength.
    Ensemble {
        #[arg(long, short = 'r', default_value_t = 100)]
        realizations: usize,
    },
    /// Mean N_T against disorder strength for fluxes 0 and 1/4.
    Sweep {
        /// Comma-separated disorder strengths delta / kappa.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_DELTAS)]
        deltas: Vec<f64>,
        #[arg(long, short = 'r', default_value_t = 50)]
        realizations: usize,
    },
}

impl CommonArgs {
    /// Loads the config (or defaults) and applies the overrides; the result
    /// is validated again.
    pub fn resolve(&self) -> Result<SimConfig> {
        let mut c = match &self.config {
            Some(path) => parse_config(path)?,
            None => SimConfig::default(),
        };
        let kappa = c.lattice.kappa;
        if let Some(dir) = &self.out_dir {
            c.output.dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            c.disorder.seed = seed;
        }
        if let Some(flux) = self.flux {
            c.flux = flux;
        }
        if let Some(d) = self.delta {
            c.disorder.delta = d * kappa;
        }
        if let Some(g) = self.coupling {
            c.qubit.coupling = g * kappa;
        }
        if let Some(w) = self.detuning {
            c.qubit.detuning = w * kappa;
        }
        if let Some(dt) = self.dt {
            c.integrator.dt = dt / kappa;
        }
        if let Some(t) = self.t_final {
            c.integrator.t_final = t / kappa;
        }
        if let Some(nx) = self.nx {
            c.lattice.nx = nx;
        }
        if let Some(ny) = self.ny {
            c.lattice.ny = ny;
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be >= 1"));
        }
        c.validate()?;
        Ok(c)
    }
}

fn dispatch(cli: &Cli) -> Result<String> {
    let config = cli.common.resolve()?;
    let seed = config.disorder.seed;
    Ok(match &cli.command {
        Command::Bands => cmd_bands(&config)?.summary,
        Command::Decay { dump_operator } => cmd_decay(&config, *dump_operator)?.summary,
        Command::Ensemble { realizations } => cmd_ensemble(&config, *realizations, seed)?.summary,
        Command::Sweep {
            deltas,
            realizations,
        } => {
            let scaled: Vec<f64> = deltas.iter().map(|d| d * config.lattice.kappa).collect();
            cmd_sweep(&config, &scaled, *realizations, seed)?.summary
        }
    })
}

/// Parses `args`, runs the command, prints its summary, and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.common.workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::numerical(format!("cannot start worker pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli))),
        _ => dispatch(&cli),
    };
    match outcome {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
