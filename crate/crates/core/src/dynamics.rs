//! Coupled qubit/lattice amplitude equations in the single-excitation sector,
//!
//! ```text
//! i dq/dt       = Omega q + Delta a[0,0]
//! i da[n,m]/dt  = (H a)[n,m] + Delta delta_{n,0} delta_{m,0} q
//! ```
//!
//! integrated from `q(0) = 1, a(0) = 0` with fixed-step classical RK4.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BathOperator, SplitField};

/// Largest tolerated `dt * (spectral bound)`.
pub const STABILITY_LIMIT: f64 = 0.5;

/// Largest tolerated deviation of the total norm from one on a closed bath.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitParams {
    /// Atom-photon coupling `Delta`.
    pub coupling: f64,
    /// Detuning `Omega = omega_0 - omega_c` from the reference cavity frequency.
    pub detuning: f64,
}

impl Default for QubitParams {
    fn default() -> Self {
        QubitParams {
            coupling: 0.2,
            detuning: -1.5,
        }
    }
}

impl QubitParams {
    pub fn new(coupling: f64, detuning: f64) -> Self {
        QubitParams { coupling, detuning }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::config("qubit.coupling", "must be finite and >= 0"));
        }
        if !self.detuning.is_finite() {
            return Err(Error::config("qubit.detuning", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSpec {
    pub dt: f64,
    pub t_final: f64,
    pub sample_every: usize,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec {
            dt: 0.01,
            t_final: 50.0,
            sample_every: 2,
        }
    }
}

impl IntegratorSpec {
    pub fn new(dt: f64, t_final: f64, sample_every: usize) -> Self {
        IntegratorSpec {
            dt,
            t_final,
            sample_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("integrator.dt", "must be finite and > 0"));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::config("integrator.t_final", "must be finite and > 0"));
        }
        if self.sample_every == 0 {
            return Err(Error::config("integrator.sample_every", "must be >= 1"));
        }
        if self.sample_count() < 2 {
            return Err(Error::config(
                "integrator.sample_every",
                "horizon shorter than one sampling stride",
            ));
        }
        Ok(())
    }

    /// Checks `dt * (4 kappa + delta + |Omega| + Delta) <= 0.5`.
    pub fn check_stability(&self, bath: &BathOperator, qubit: &QubitParams) -> Result<()> {
        let bound = bath.norm_bound() + qubit.detuning.abs() + qubit.coupling;
        let product = self.dt * bound;
        if product > STABILITY_LIMIT {
            return Err(Error::config(
                "integrator.dt",
                format!(
                    "dt * spectral bound = {product:.3} exceeds {STABILITY_LIMIT}; \
                     reduce dt below {:.4}",
                    STABILITY_LIMIT / bound
                ),
            ));
        }
        Ok(())
    }

    /// Number of RK4 steps actually taken: the largest multiple of
    /// `sample_every` not exceeding `t_final / dt` (rounded to nearest).
    pub fn steps(&self) -> usize {
        let total = (self.t_final / self.dt).round() as usize;
        total - total % self.sample_every
    }

    pub fn sample_count(&self) -> usize {
        self.steps() / self.sample_every + 1
    }
}

/// Full single-excitation wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: C64,
    pub alpha: Vec<C64>,
}

impl JointState {
    /// Excited qubit, empty lattice.
    pub fn initial(dim: usize) -> Self {
        JointState {
            q: C64::new(1.0, 0.0),
            alpha: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.q.norm_sqr() + self.alpha.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }
}

/// Sampled qubit amplitude `q(t_k)`, `t_k = k * dt * sample_every`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub q: Vec<C64>,
    /// Total norm `|q|^2 + sum |a|^2` at each sample.
    pub norm: Vec<f64>,
}

impl DecayTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.q.iter().map(|q| q.norm_sqr()).collect()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.q.iter().map(|q| q.norm()).collect()
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.norm.iter().fold(0.0, |a, n| a.max((n - 1.0).abs()))
    }

    /// From raw samples, e.g. analytic test signals.
    pub fn from_samples(times: Vec<f64>, q: Vec<C64>) -> Self {
        let norm = vec![1.0; times.len()];
        DecayTrace { times, q, norm }
    }

    /// CSV with columns `t_kappa, re_q, im_q, pop`.
    pub fn write_csv<W: Write>(&self, w: W, kappa: f64) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t_kappa", "re_q", "im_q", "pop"])?;
        for (t, q) in self.times.iter().zip(&self.q) {
            wr.write_record(&[
                (t * kappa).to_string(),
                q.re.to_string(),
                q.im.to_string(),
                q.norm_sqr().to_string(),
            ])?;
        }
        wr.flush().map_err(|e| Error::io("trace csv", e))?;
        Ok(())
    }
}

/// Time derivative of the joint state.
pub fn rhs(state: &JointState, bath: &BathOperator, qubit: &QubitParams) -> JointState {
    let o = bath.spec().origin();
    let minus_i = C64::new(0.0, -1.0);
    let mut alpha = vec![C64::new(0.0, 0.0); bath.dim()];
    bath.apply(&state.alpha, &mut alpha);
    alpha[o] += qubit.coupling * state.q;
    alpha.iter_mut().for_each(|a| *a *= minus_i);
    let q = minus_i * (qubit.detuning * state.q + qubit.coupling * state.alpha[o]);
    JointState { q, alpha }
}

/// RK4 stepper with preallocated stage buffers in split storage.
struct Stepper<'a> {
    bath: &'a BathOperator,
    qubit: QubitParams,
    origin: usize,
    stage: SplitField,
    k: SplitField,
    acc: SplitField,
}

impl<'a> Stepper<'a> {
    fn new(bath: &'a BathOperator, qubit: QubitParams) -> Self {
        let dim = bath.dim();
        Stepper {
            bath,
            qubit,
            origin: bath.spec().origin(),
            stage: SplitField::zeros(dim),
            k: SplitField::zeros(dim),
            acc: SplitField::zeros(dim),
        }
    }

    fn step(&mut self, q: &mut C64, alpha: &mut SplitField, dt: f64) {
        let minus_i = C64::new(0.0, -1.0);
        let weights = [dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0];
        let next_stage = [dt / 2.0, dt / 2.0, dt, 0.0];
        let o = self.origin;

        self.acc.copy_from(alpha);
        let mut q_acc = *q;
        let mut q_stage = *q;

        for s in 0..4 {
            let alpha_stage = if s == 0 { &*alpha } else { &self.stage };
            // k = H a_stage + Delta q_stage e_0, i.e. the derivative without its -i.
            self.bath.apply_split(alpha_stage, &mut self.k);
            let a0 = alpha_stage.get(o);
            self.k.re[o] += self.qubit.coupling * q_stage.re;
            self.k.im[o] += self.qubit.coupling * q_stage.im;
            let kq = self.qubit.detuning * q_stage + self.qubit.coupling * a0;

            // Multiplying by -i*w maps (kr, ki) to (w ki, -w kr).
            let (w, c) = (weights[s], next_stage[s]);
            q_acc += minus_i * w * kq;
            q_stage = *q + minus_i * c * kq;
            let (kr, ki) = (&self.k.re, &self.k.im);
            for j in 0..kr.len() {
                self.acc.re[j] += w * ki[j];
                self.acc.im[j] -= w * kr[j];
            }
            if s < 3 {
                for j in 0..kr.len() {
                    self.stage.re[j] = alpha.re[j] + c * ki[j];
                    self.stage.im[j] = alpha.im[j] - c * kr[j];
                }
            }
        }
        *q = q_acc;
        std::mem::swap(alpha, &mut self.acc);
    }
}

/// Integrates the joint initial state over `spec` and records `q(t)`.
pub fn evolve(spec: &IntegratorSpec, bath: &BathOperator, qubit: &QubitParams) -> Result<DecayTrace> {
    evolve_from(spec, bath, qubit, JointState::initial(bath.dim())).map(|(trace, _)| trace)
}

/// As [`evolve`], from an arbitrary starting state; also returns the final
/// state.
pub fn evolve_from(
    spec: &IntegratorSpec,
    bath: &BathOperator,
    qubit: &QubitParams,
    mut state: JointState,
) -> Result<(DecayTrace, JointState)> {
    spec.validate()?;
    qubit.validate()?;
    spec.check_stability(bath, qubit)?;
    if state.alpha.len() != bath.dim() {
        return Err(Error::config("state", "field dimension does not match the bath"));
    }

    let closed = !bath.is_absorbing();
    let stride = spec.sample_every;
    let samples = spec.sample_count();
    let mut times = Vec::with_capacity(samples);
    let mut q = Vec::with_capacity(samples);
    let mut norm = Vec::with_capacity(samples);
    let initial_norm = state.norm_sqr();

    let mut stepper = Stepper::new(bath, *qubit);
    let mut amp = state.q;
    let mut field = SplitField::from_complex(&state.alpha);
    for k in 0..samples {
        if k > 0 {
            for _ in 0..stride {
                stepper.step(&mut amp, &mut field, spec.dt);
            }
        }
        let t = (k * stride) as f64 * spec.dt;
        let n = amp.norm_sqr() + field.norm_sqr();
        if !n.is_finite() {
            return Err(Error::numerical(format!("state diverged at t = {t}")));
        }
        if closed && (n - initial_norm).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::numerical(format!(
                "norm drift {:.3e} at t = {t} exceeds {NORM_DRIFT_LIMIT:e}; reduce dt",
                n - initial_norm
            )));
        }
        times.push(t);
        q.push(amp);
        norm.push(n);
    }
    state.q = amp;
    state.alpha = field.to_complex();
    Ok((DecayTrace { times, q, norm }, state))
}

/// Least-squares slope of `-ln |q(t)|^2` over samples with `t_a <= t <= t_b`.
pub fn fit_decay_rate(trace: &DecayTrace, window: (f64, f64)) -> Result<f64> {
    let (ta, tb) = window;
    if trace.is_empty() || ta.partial_cmp(&tb) != Some(std::cmp::Ordering::Less) || ta < trace.times[0] || tb > trace.final_time() {
        return Err(Error::config(
            "window",
            format!(
                "window ({ta}, {tb}) is not inside the trace span [0, {}]",
                trace.final_time()
            ),
        ));
    }
    let pts: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&trace.q)
        .filter(|(t, _)| **t >= ta && **t <= tb)
        .map(|(&t, q)| (t, q.norm_sqr()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::config("window", "fewer than two samples in window"));
    }
    if pts.iter().any(|&(_, p)| p <= 0.0) {
        return Err(Error::numerical("population vanishes inside the fit window"));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| -p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, p) in &pts {
        let dx = t - tm;
        sxy += dx * (-p.ln() - ym);
        sxx += dx * dx;
    }
    Ok(sxy / sxx)
}
