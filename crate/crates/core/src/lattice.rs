//! Finite truncation of the disordered Harper-Hofstadter photon lattice.
//!
//! Sites are indexed by column `n = 0..nx` (distance from the physical edge
//! hosting the qubit) and row `m = m_min..=m_max`, a block of `ny` consecutive
//! integers centred on `m = 0`. Storage is row-major in `n`, so the `ny`
//! amplitudes of one column are contiguous and the `m +/- 1` neighbours are
//! adjacent in memory.
//!
//! The bath operator acts as
//!
//! ```text
//! (H a)[n,m] = dw[n,m] a[n,m]
//!            + k (a[n+1,m] + a[n-1,m] + e^{+2 pi i n phi} a[n,m+1] + e^{-2 pi i n phi} a[n,m-1])
//! ```
//!
//! with amplitudes outside the retained block treated as zero.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rational flux per plaquette `p/q`, in units of the flux quantum.
///
/// Deserialization does not validate; [`crate::config::SimConfig::validate`]
/// and [`FluxRational::new`] do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxRational {
    p: i64,
    q: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

impl FluxRational {
    pub const ZERO: FluxRational = FluxRational { p: 0, q: 1 };
    pub const QUARTER: FluxRational = FluxRational { p: 1, q: 4 };

    /// Rejects `q < 1` and non-reduced fractions. `p = 0` must be written `0/1`.
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q < 1 {
            return Err(Error::config("flux.q", format!("denominator must be >= 1, got {q}")));
        }
        if gcd(p, q) != 1 {
            return Err(Error::config(
                "flux.p",
                format!("{p}/{q} is not in lowest terms"),
            ));
        }
        Ok(FluxRational { p, q })
    }

    pub fn validate(&self) -> Result<()> {
        FluxRational::new(self.p, self.q).map(|_| ())
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Peierls phase `2 pi n phi` carried by the `m -> m+1` hop in column `n`.
    ///
    /// Reduced modulo `q` first so the phase is exact-periodic in `n`.
    pub fn column_phase(&self, n: usize) -> f64 {
        let r = (self.p * n as i64).rem_euclid(self.q);
        2.0 * PI * r as f64 / self.q as f64
    }
}

impl std::fmt::Display for FluxRational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Boundary {
    #[default]
    Hard,
    /// Linear imaginary absorbing ramp on the three far boundaries.
    Sponge { width: usize, strength: f64 },
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
    pub kappa: f64,
    pub boundary: Boundary,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec {
            nx: 60,
            ny: 241,
            kappa: 1.0,
            boundary: Boundary::Hard,
        }
    }
}

impl LatticeSpec {
    pub fn new(nx: usize, ny: usize, kappa: f64) -> Self {
        LatticeSpec {
            nx,
            ny,
            kappa,
            boundary: Boundary::Hard,
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 {
            return Err(Error::config("lattice.nx", "must be >= 1"));
        }
        if self.ny == 0 {
            return Err(Error::config("lattice.ny", "must be >= 1"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::config("lattice.kappa", "must be finite and > 0"));
        }
        if let Boundary::Sponge { width, strength } = self.boundary {
            if width == 0 || 2 * width >= self.nx.min(self.ny) {
                return Err(Error::config(
                    "lattice.boundary.width",
                    format!(
                        "sponge width must satisfy 1 <= width < min(nx, ny)/2, got {width}"
                    ),
                ));
            }
            if !(strength.is_finite() && strength >= 0.0) {
                return Err(Error::config(
                    "lattice.boundary.strength",
                    "must be finite and >= 0",
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.nx * self.ny
    }

    pub fn m_min(&self) -> i64 {
        -((self.ny / 2) as i64)
    }

    pub fn m_max(&self) -> i64 {
        self.m_min() + self.ny as i64 - 1
    }

    /// Linear index of site `(n, m)`, or `None` outside the truncation.
    pub fn index(&self, n: usize, m: i64) -> Option<usize> {
        if n >= self.nx || m < self.m_min() || m > self.m_max() {
            return None;
        }
        Some(n * self.ny + (m - self.m_min()) as usize)
    }

    /// Index of the qubit-coupled site `(0, 0)`.
    pub fn origin(&self) -> usize {
        (-self.m_min()) as usize
    }

    pub fn site(&self, index: usize) -> (usize, i64) {
        (index / self.ny, (index % self.ny) as i64 + self.m_min())
    }

    /// Latest time at which no amplitude reflected from a hard far wall can
    /// have returned to the qubit site, using the per-axis group-velocity
    /// bound `2 kappa`.
    pub fn light_cone_horizon(&self) -> f64 {
        let reach = (self.nx - 1).min(self.m_max() as usize).min((-self.m_min()) as usize);
        reach as f64 / self.kappa
    }

    pub fn check_light_cone(&self, t_final: f64) -> Result<()> {
        if matches!(self.boundary, Boundary::Sponge { .. }) {
            return Ok(());
        }
        let horizon = self.light_cone_horizon();
        if t_final > horizon {
            let need = (t_final * self.kappa).ceil() as usize;
            return Err(Error::config(
                "lattice",
                format!(
                    "{}x{} lattice only resolves t <= {horizon}/kappa before wall reflections \
                     reach the qubit, but t_final = {t_final}; enlarge to nx >= {} and \
                     ny >= {}, shorten the horizon, or enable a sponge boundary",
                    self.nx,
                    self.ny,
                    need + 1,
                    2 * need + 1
                ),
            ));
        }
        Ok(())
    }
}

/// Random cavity detunings `dw[n,m]`, iid uniform on the open interval
/// `(-delta, delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub delta: f64,
    pub seed: u64,
    pub nx: usize,
    pub ny: usize,
    pub detunings: Vec<f64>,
}

impl DisorderRealization {
    pub fn clean(spec: &LatticeSpec) -> Self {
        DisorderRealization {
            delta: 0.0,
            seed: 0,
            nx: spec.nx,
            ny: spec.ny,
            detunings: vec![0.0; spec.dim()],
        }
    }

    pub fn matches(&self, spec: &LatticeSpec) -> bool {
        self.nx == spec.nx && self.ny == spec.ny && self.detunings.len() == spec.dim()
    }
}

fn zigzag(m: i64) -> u64 {
    ((m << 1) ^ (m >> 63)) as u64
}

/// Detuning of site `(n, m)` for a given seed.
///
/// Each site reads one word from its own position in a ChaCha8 keystream
/// (stream = column, word position = zigzag-encoded row), so the value is a
/// pure function of `(seed, n, m)` and independent of lattice size and
/// traversal order.
pub fn site_detuning(seed: u64, delta: f64, n: usize, m: i64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n as u64);
    rng.set_word_pos(2 * zigzag(m) as u128);
    // 52 random bits, shifted half a step: u lies strictly inside (0, 1) and
    // delta * (2u - 1) cannot round onto +/- delta.
    let bits = rng.next_u64() >> 12;
    let u = (bits as f64 + 0.5) * (1.0 / (1u64 << 52) as f64);
    delta * (2.0 * u - 1.0)
}

pub fn sample_disorder(delta: f64, seed: u64, spec: &LatticeSpec) -> Result<DisorderRealization> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::config("disorder.delta", "must be finite and >= 0"));
    }
    let detunings = (0..spec.dim())
        .map(|i| {
            let (n, m) = spec.site(i);
            site_detuning(seed, delta, n, m)
        })
        .collect();
    Ok(DisorderRealization {
        delta,
        seed,
        nx: spec.nx,
        ny: spec.ny,
        detunings,
    })
}

/// Complex field stored as separate real and imaginary planes, the layout
/// used by the stencil kernels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitField {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl SplitField {
    pub fn zeros(len: usize) -> Self {
        SplitField {
            re: vec![0.0; len],
            im: vec![0.0; len],
        }
    }

    pub fn from_complex(values: &[C64]) -> Self {
        SplitField {
            re: values.iter().map(|z| z.re).collect(),
            im: values.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_complex(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect()
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn get(&self, i: usize) -> C64 {
        C64::new(self.re[i], self.im[i])
    }

    pub fn set(&mut self, i: usize, z: C64) {
        self.re[i] = z.re;
        self.im[i] = z.im;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re.iter().zip(&self.im).map(|(r, i)| r * r + i * i).sum()
    }

    pub fn copy_from(&mut self, other: &SplitField) {
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }
}

/// Single-excitation action of the bath Hamiltonian.
///
/// Stored as a five-point stencil: the complex diagonal plus the two forward
/// hop amplitudes `H[i, i+1]` (row direction) and `H[i, i+ny]` (column
/// direction). Backward hops are their conjugates, so the Hermitian part is
/// Hermitian by construction. The sponge, when present, only adds a negative
/// imaginary part to the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BathOperator {
    spec: LatticeSpec,
    diag: SplitField,
    hop_m: SplitField,
    hop_n: SplitField,
    norm_bound: f64,
}

pub fn build_bath_operator(
    spec: &LatticeSpec,
    flux: FluxRational,
    disorder: &DisorderRealization,
) -> Result<BathOperator> {
    spec.validate()?;
    if !disorder.matches(spec) {
        return Err(Error::config(
            "disorder",
            format!(
                "realization is {}x{} but lattice is {}x{}",
                disorder.nx, disorder.ny, spec.nx, spec.ny
            ),
        ));
    }
    let (nx, ny, kappa) = (spec.nx, spec.ny, spec.kappa);
    let dim = spec.dim();
    let mut diag: Vec<C64> = disorder.detunings.iter().map(|&d| C64::new(d, 0.0)).collect();
    let mut hop_m = vec![C64::new(0.0, 0.0); dim];
    let mut hop_n = vec![C64::new(0.0, 0.0); dim];

    for n in 0..nx {
        let peierls = C64::from_polar(kappa, flux.column_phase(n));
        let row = n * ny;
        for j in 0..ny {
            if j + 1 < ny {
                hop_m[row + j] = peierls;
            }
            if n + 1 < nx {
                hop_n[row + j] = C64::new(kappa, 0.0);
            }
        }
    }

    let mut absorption = 0.0;
    if let Boundary::Sponge { width, strength } = spec.boundary {
        absorption = strength;
        let ramp = |d: usize| {
            if d < width {
                strength * (width - d) as f64 / width as f64
            } else {
                0.0
            }
        };
        for n in 0..nx {
            for j in 0..ny {
                let gamma = ramp(nx - 1 - n).max(ramp(j)).max(ramp(ny - 1 - j));
                diag[n * ny + j].im -= gamma;
            }
        }
    }

    let max_detuning = disorder.detunings.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    Ok(BathOperator {
        spec: *spec,
        diag: SplitField::from_complex(&diag),
        hop_m: SplitField::from_complex(&hop_m),
        hop_n: SplitField::from_complex(&hop_n),
        norm_bound: 4.0 * kappa + disorder.delta.max(max_detuning) + absorption,
    })
}

impl BathOperator {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Upper bound on the operator norm, used by the integrator's stability
    /// guard.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn is_absorbing(&self) -> bool {
        self.diag.im.iter().any(|&d| d != 0.0)
    }

    /// `out = H x`.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        let xs = SplitField::from_complex(x);
        let mut ys = SplitField::zeros(self.dim());
        self.apply_split(&xs, &mut ys);
        for (o, i) in out.iter_mut().zip(0..) {
            *o = ys.get(i);
        }
    }

    /// `out = H x` on split storage. This is the hot loop of the integrator.
    pub fn apply_split(&self, x: &SplitField, out: &mut SplitField) {
        let ny = self.spec.ny;
        let nx = self.spec.nx;
        assert_eq!(x.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        for n in 0..nx {
            let r = n * ny..(n + 1) * ny;
            let (xr, xi) = (&x.re[r.clone()], &x.im[r.clone()]);
            let (or, oi) = (&mut out.re[r.clone()], &mut out.im[r.clone()]);

            let (dr, di) = (&self.diag.re[r.clone()], &self.diag.im[r.clone()]);
            for j in 0..ny {
                or[j] = dr[j] * xr[j] - di[j] * xi[j];
                oi[j] = dr[j] * xi[j] + di[j] * xr[j];
            }

            let (hr, hi) = (&self.hop_m.re[r.clone()], &self.hop_m.im[r.clone()]);
            for j in 0..ny - 1 {
                or[j] += hr[j] * xr[j + 1] - hi[j] * xi[j + 1];
                oi[j] += hr[j] * xi[j + 1] + hi[j] * xr[j + 1];
            }
            for j in 1..ny {
                or[j] += hr[j - 1] * xr[j - 1] + hi[j - 1] * xi[j - 1];
                oi[j] += hr[j - 1] * xi[j - 1] - hi[j - 1] * xr[j - 1];
            }

            if n + 1 < nx {
                let f = r.start + ny..r.end + ny;
                let (hr, hi) = (&self.hop_n.re[r.clone()], &self.hop_n.im[r.clone()]);
                let (yr, yi) = (&x.re[f.clone()], &x.im[f]);
                for j in 0..ny {
                    or[j] += hr[j] * yr[j] - hi[j] * yi[j];
                    oi[j] += hr[j] * yi[j] + hi[j] * yr[j];
                }
            }
            if n > 0 {
                let b = r.start - ny..r.start;
                let (hr, hi) = (&self.hop_n.re[b.clone()], &self.hop_n.im[b.clone()]);
                let (yr, yi) = (&x.re[b.clone()], &x.im[b]);
                for j in 0..ny {
                    or[j] += hr[j] * yr[j] + hi[j] * yi[j];
                    oi[j] += hr[j] * yi[j] - hi[j] * yr[j];
                }
            }
        }
    }

    /// Matrix element `H[row, col]`.
    pub fn element(&self, row: usize, col: usize) -> C64 {
        let ny = self.spec.ny;
        let zero = C64::new(0.0, 0.0);
        if row == col {
            self.diag.get(row)
        } else if col == row + 1 && row % ny + 1 < ny {
            self.hop_m.get(row)
        } else if row == col + 1 && col % ny + 1 < ny {
            self.hop_m.get(col).conj()
        } else if col == row + ny && col < self.dim() {
            self.hop_n.get(row)
        } else if row == col + ny && row < self.dim() {
            self.hop_n.get(col).conj()
        } else {
            zero
        }
    }

    /// Nonzero entries as `(row, col, value)`, row-major.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let ny = self.spec.ny;
        let dim = self.dim();
        let mut out = Vec::with_capacity(5 * dim);
        for row in 0..dim {
            let mut cols = Vec::with_capacity(5);
            if row >= ny {
                cols.push(row - ny);
            }
            if row % ny > 0 {
                cols.push(row - 1);
            }
            cols.push(row);
            if row % ny + 1 < ny {
                cols.push(row + 1);
            }
            if row + ny < dim {
                cols.push(row + ny);
            }
            for col in cols {
                let v = self.element(row, col);
                if v != C64::new(0.0, 0.0) {
                    out.push((row, col, v));
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Coordinate-format dump, one `row col re im` line per nonzero.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        w.flush()
    }

    /// Oriented product of the hop phases around the plaquette with lower-left
    /// corner at linear index `site`, traversed
    /// `(n,m) -> (n+1,m) -> (n+1,m+1) -> (n,m+1) -> (n,m)`. Each step `a -> b`
    /// contributes `H[a, b] / |H[a, b]|`.
    pub fn plaquette_phase(&self, site: usize) -> Option<C64> {
        let ny = self.spec.ny;
        let (n, _) = self.spec.site(site);
        if n + 1 >= self.spec.nx || site % ny + 1 >= ny {
            return None;
        }
        let path = [site, site + ny, site + ny + 1, site + 1, site];
        let mut prod = C64::new(1.0, 0.0);
        for w in path.windows(2) {
            let h = self.element(w[0], w[1]);
            prod *= h / h.norm();
        }
        Some(prod)
    }

    /// Conjugate by the diagonal unitary `U = diag(e^{i chi})`, i.e.
    /// `H'[a, b] = e^{i chi_a} H[a, b] e^{-i chi_b}`. Keep `chi` at the qubit
    /// site equal to zero to leave the qubit coupling untouched.
    pub fn gauge_transformed(&self, chi: &[f64]) -> Result<BathOperator> {
        if chi.len() != self.dim() {
            return Err(Error::config(
                "gauge",
                format!("expected {} phases, got {}", self.dim(), chi.len()),
            ));
        }
        let ny = self.spec.ny;
        let mut out = self.clone();
        for i in 0..self.dim() {
            if i + 1 < self.dim() {
                let h = self.hop_m.get(i) * C64::from_polar(1.0, chi[i] - chi[i + 1]);
                out.hop_m.set(i, h);
            }
            if i + ny < self.dim() {
                let h = self.hop_n.get(i) * C64::from_polar(1.0, chi[i] - chi[i + ny]);
                out.hop_n.set(i, h);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dim: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    fn clean(nx: usize, ny: usize, flux: FluxRational) -> BathOperator {
        let spec = LatticeSpec::new(nx, ny, 1.0);
        build_bath_operator(&spec, flux, &DisorderRealization::clean(&spec)).unwrap()
    }

    #[test]
    fn flux_validation() {
        assert!(FluxRational::new(1, 4).is_ok());
        assert!(FluxRational::new(0, 1).is_ok());
        let err = FluxRational::new(1, 0).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "flux.q"));
        assert!(FluxRational::new(2, 8).is_err());
        assert!(FluxRational::new(0, 4).is_err());
        assert!(FluxRational::new(-1, 3).is_ok());
    }

    #[test]
    fn index_ranges_centre_on_origin() {
        let spec = LatticeSpec::new(3, 241, 1.0);
        assert_eq!((spec.m_min(), spec.m_max()), (-120, 120));
        assert_eq!(spec.site(spec.origin()), (0, 0));
        let even = LatticeSpec::new(2, 4, 1.0);
        assert_eq!((even.m_min(), even.m_max()), (-2, 1));
        assert_eq!(even.index(1, 1), Some(7));
        assert_eq!(even.index(2, 0), None);
        let one = LatticeSpec::new(1, 1, 1.0);
        assert_eq!(one.origin(), 0);
    }

    #[test]
    fn sponge_width_is_bounded() {
        let spec = LatticeSpec::new(10, 21, 1.0).with_boundary(Boundary::Sponge {
            width: 5,
            strength: 1.0,
        });
        assert!(spec.validate().is_err());
        let spec = spec.with_boundary(Boundary::Sponge { width: 4, strength: 1.0 });
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn zero_disorder_is_all_zeros() {
        let spec = LatticeSpec::new(7, 9, 1.0);
        for seed in [0, 1, u64::MAX] {
            let d = sample_disorder(0.0, seed, &spec).unwrap();
            assert!(d.detunings.iter().all(|&x| x == 0.0));
        }
        assert!(sample_disorder(-1.0, 0, &spec).is_err());
    }

    #[test]
    fn disorder_statistics_and_bounds() {
        let spec = LatticeSpec::new(10, 10, 1.0);
        let d = sample_disorder(1.0, 42, &spec).unwrap();
        let mean = d.detunings.iter().sum::<f64>() / d.detunings.len() as f64;
        assert!(mean.abs() < 0.2, "mean {mean}");
        assert!(d.detunings.iter().all(|x| x.abs() < 1.0));
        assert_eq!(d, sample_disorder(1.0, 42, &spec).unwrap());
        assert_ne!(d, sample_disorder(1.0, 43, &spec).unwrap());
    }

    #[test]
    fn disorder_is_independent_of_lattice_size() {
        let small = LatticeSpec::new(4, 5, 1.0);
        let big = LatticeSpec::new(8, 11, 1.0);
        let a = sample_disorder(0.7, 9, &small).unwrap();
        let b = sample_disorder(0.7, 9, &big).unwrap();
        for i in 0..small.dim() {
            let (n, m) = small.site(i);
            assert_eq!(a.detunings[i], b.detunings[big.index(n, m).unwrap()]);
        }
    }

    #[test]
    fn interior_site_hops_to_four_neighbours() {
        let op = clean(5, 5, FluxRational::ZERO);
        let spec = *op.spec();
        let i = spec.index(2, 0).unwrap();
        let mut out = vec![C64::new(0.0, 0.0); op.dim()];
        op.apply(&basis(op.dim(), i), &mut out);
        assert_eq!(out[i], C64::new(0.0, 0.0));
        for (n, m) in [(1, 0), (3, 0), (2, 1), (2, -1)] {
            assert_eq!(out[spec.index(n, m).unwrap()], C64::new(1.0, 0.0));
        }
        let nonzero = out.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn edge_site_has_three_neighbours() {
        let op = clean(5, 5, FluxRational::QUARTER);
        let o = op.spec().origin();
        let mut out = vec![C64::new(0.0, 0.0); op.dim()];
        op.apply(&basis(op.dim(), o), &mut out);
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 3);
    }

    #[test]
    fn quarter_flux_plaquettes() {
        let op = clean(9, 7, FluxRational::QUARTER);
        let expected = C64::new(0.0, 1.0);
        let mut count = 0;
        for s in 0..op.dim() {
            if let Some(p) = op.plaquette_phase(s) {
                assert!((p - expected).norm() < 1e-14, "site {s}: {p}");
                count += 1;
            }
        }
        assert_eq!(count, 8 * 6);
    }

    #[test]
    fn apply_matches_dense() {
        let spec = LatticeSpec::new(4, 5, 0.8).with_boundary(Boundary::Hard);
        let dis = sample_disorder(0.5, 3, &spec).unwrap();
        let op = build_bath_operator(&spec, FluxRational::new(1, 3).unwrap(), &dis).unwrap();
        let dense = op.to_dense();
        let x: Vec<C64> = (0..op.dim())
            .map(|i| C64::new((i as f64).sin(), (2.0 * i as f64).cos()))
            .collect();
        let mut y = vec![C64::new(0.0, 0.0); op.dim()];
        op.apply(&x, &mut y);
        for r in 0..op.dim() {
            let expect: C64 = (0..op.dim()).map(|c| dense[(r, c)] * x[c]).sum();
            assert!((expect - y[r]).norm() < 1e-13);
        }
        assert!(op.triplets().iter().all(|&(r, c, _)| r.abs_diff(c) <= spec.ny));
    }

    #[test]
    fn sponge_spares_the_qubit_edge() {
        let spec = LatticeSpec::new(12, 13, 1.0).with_boundary(Boundary::Sponge {
            width: 3,
            strength: 0.6,
        });
        let op = build_bath_operator(&spec, FluxRational::ZERO, &DisorderRealization::clean(&spec))
            .unwrap();
        assert!(op.is_absorbing());
        assert_eq!(op.element(spec.origin(), spec.origin()).im, 0.0);
        let far = spec.index(11, 0).unwrap();
        assert!((op.element(far, far).im + 0.6).abs() < 1e-15);
        let inner = spec.index(9, 0).unwrap();
        assert!((op.element(inner, inner).im + 0.2).abs() < 1e-15);
        let clear = spec.index(8, 0).unwrap();
        assert_eq!(op.element(clear, clear).im, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = LatticeSpec::new(4, 5, 1.0);
        let other = DisorderRealization::clean(&LatticeSpec::new(5, 5, 1.0));
        assert!(build_bath_operator(&spec, FluxRational::ZERO, &other).is_err());
    }

    #[test]
    fn coordinate_dump_lists_every_nonzero() {
        let op = clean(2, 2, FluxRational::ZERO);
        let mut buf = Vec::new();
        op.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.lines().next().unwrap().starts_with("0 1 "));
    }

    #[test]
    fn light_cone_horizon_uses_nearest_far_wall() {
        let spec = LatticeSpec::new(60, 241, 1.0);
        assert_eq!(spec.light_cone_horizon(), 59.0);
        assert!(spec.check_light_cone(50.0).is_ok());
        assert!(LatticeSpec::new(40, 121, 1.0).check_light_cone(45.0).is_err());
    }
}
