//! Direct time-domain integration of the full nonlinear mean-field
//! equations, used as an independent check of the perturbative results.
//!
//! The state is integrated as a deviation `u = y − r` from a fixed
//! reference point `r` (normally the steady state). The right-hand side
//! is the exact difference `f(r + u) − f(r)` written out without
//! cancellation, plus the constant `f(r)` evaluated numerically. Nothing
//! is linearised; the shift only lets the step-size control act on the
//! probe-scale motion instead of the much larger static amplitudes.

pub mod harmonics;
pub mod integrator;
pub mod stability;

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ParamsError, SystemParams};
use crate::steady::SteadyState;

pub use harmonics::{extract_harmonics, Harmonics, Sidebands};
pub use integrator::{IntegratorError, Sampling, StepOptions};
pub use stability::{classify_stability, jacobian, Stability};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Amplitudes beyond this multiple of the drive scale count as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Minimum number of probe periods accepted for harmonic extraction.
pub const MIN_PERIODS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Integrator(IntegratorError),
    #[error("trajectory diverged at t = {t} µs (|a| = {amplitude:e})")]
    Diverged { t: f64, amplitude: f64 },
    #[error("steady state is unstable (largest Re λ = {abscissa:e}); no stationary response to compare")]
    Unstable { abscissa: f64 },
    #[error("harmonic window needs at least {min} periods, got {periods}")]
    TooFewPeriods { periods: f64, min: usize },
    #[error("sampling window spans {periods} probe periods, not an integer number")]
    WindowMisaligned { periods: f64 },
    #[error("probe detuning must be positive and finite, got {0}")]
    InvalidDetuning(f64),
}

impl From<IntegratorError> for OracleError {
    fn from(e: IntegratorError) -> Self {
        match e {
            IntegratorError::Stopped { t, reason } => {
                let amplitude = reason.parse().unwrap_or(f64::INFINITY);
                OracleError::Diverged { t, amplitude }
            }
            other => OracleError::Integrator(other),
        }
    }
}

/// Instantaneous mean-field values ⟨a⟩, ⟨b⟩, ⟨σ⁻⟩, ⟨σ_z⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub a: Complex64,
    pub b: Complex64,
    pub s: Complex64,
    pub z: f64,
}

impl MeanFieldState {
    /// Empty cavity and mechanics, qubit in its ground state.
    pub fn ground() -> Self {
        Self { a: Complex64::new(0.0, 0.0), b: Complex64::new(0.0, 0.0), s: Complex64::new(0.0, 0.0), z: -1.0 }
    }

    pub fn from_steady(s: &SteadyState) -> Self {
        Self { a: s.a0, b: s.b0, s: s.l0, z: s.z0 }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.a.re, self.a.im, self.b.re, self.b.im, self.s.re, self.s.im, self.z]
    }

    pub fn from_array(y: &[f64; 7]) -> Self {
        Self {
            a: Complex64::new(y[0], y[1]),
            b: Complex64::new(y[2], y[3]),
            s: Complex64::new(y[4], y[5]),
            z: y[6],
        }
    }

    fn plus(&self, u: &[f64; 7]) -> Self {
        Self::from_array(&std::array::from_fn(|i| self.to_array()[i] + u[i]))
    }
}

/// Right-hand side of the mean-field equations at time `t` with the
/// probe at detuning `delta`.
pub fn mean_field_rhs(p: &SystemParams, delta: f64, t: f64, y: &MeanFieldState) -> MeanFieldState {
    rhs_static(p, y, p.probe * Complex64::from_polar(1.0, -delta * t))
}

fn rhs_static(p: &SystemParams, y: &MeanFieldState, forcing: Complex64) -> MeanFieldState {
    let da = -(p.gamma_a + I * p.delta_a) * y.a + I * p.chi * y.a * (2.0 * y.b.re) + p.drive + forcing;
    let db = -(p.gamma_b + I * p.omega_b) * y.b + I * p.chi * y.a.norm_sqr() - I * p.g * y.s;
    let ds = -(0.5 * p.gamma_q + I * p.omega_q) * y.s + I * p.g * y.b * y.z;
    let dz = -p.gamma_q * (y.z + 1.0) + 4.0 * p.g * (y.b * y.s.conj()).im;
    MeanFieldState { a: da, b: db, s: ds, z: dz }
}

/// The equations of motion with the probe at detuning Δ, written as a
/// deviation from a reference point.
#[derive(Debug, Clone, Copy)]
pub struct DeviationSystem {
    pub params: SystemParams,
    pub delta: f64,
    pub reference: MeanFieldState,
    offset: MeanFieldState,
}

impl DeviationSystem {
    pub fn new(params: SystemParams, delta: f64, reference: MeanFieldState) -> Self {
        let offset = rhs_static(&params, &reference, Complex64::new(0.0, 0.0));
        Self { params, delta, reference, offset }
    }

    /// Full time derivative of the absolute state at `t`.
    pub fn absolute_rhs(&self, t: f64, y: &MeanFieldState) -> MeanFieldState {
        mean_field_rhs(&self.params, self.delta, t, y)
    }

    /// du/dt for the deviation `u`.
    pub fn eval(&self, t: f64, u: &[f64; 7]) -> [f64; 7] {
        let p = &self.params;
        let r = &self.reference;
        let d = MeanFieldState::from_array(u);
        let probe = p.probe * Complex64::from_polar(1.0, -self.delta * t);

        let da = -(p.gamma_a + I * p.delta_a) * d.a
            + I * p.chi * (d.a * (2.0 * r.b.re) + r.a * (2.0 * d.b.re) + d.a * (2.0 * d.b.re))
            + probe
            + self.offset.a;
        let dn = 2.0 * (r.a.conj() * d.a).re + d.a.norm_sqr();
        let db = -(p.gamma_b + I * p.omega_b) * d.b + I * p.chi * dn - I * p.g * d.s + self.offset.b;
        let ds = -(0.5 * p.gamma_q + I * p.omega_q) * d.s
            + I * p.g * (r.b * d.z + d.b * r.z + d.b * d.z)
            + self.offset.s;
        let cross = r.b * d.s.conj() + d.b * r.s.conj() + d.b * d.s.conj();
        let dz = -p.gamma_q * d.z + 4.0 * p.g * cross.im + self.offset.z;
        MeanFieldState { a: da, b: db, s: ds, z: dz }.to_array()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    pub step: StepOptions,
    pub sampling: Sampling,
    /// Origin of the deviation coordinates; the initial state when `None`.
    pub reference: Option<MeanFieldState>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { step: StepOptions::default(), sampling: Sampling::none(), reference: None }
    }
}

/// Sampled solution of the mean-field equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub reference: MeanFieldState,
    pub sampling: Sampling,
    pub times: Vec<f64>,
    /// Samples relative to `reference`, as `[re a, im a, re b, im b, re s, im s, z]`.
    pub deviations: Vec<[f64; 7]>,
    pub final_state: MeanFieldState,
    pub stats: integrator::Stats,
}

impl Trajectory {
    pub fn state(&self, j: usize) -> MeanFieldState {
        self.reference.plus(&self.deviations[j])
    }

    pub fn states(&self) -> Vec<MeanFieldState> {
        (0..self.deviations.len()).map(|j| self.state(j)).collect()
    }

    /// CSV with columns t, re_a, im_a, re_b, im_b, re_s, im_s, z.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,re_a,im_a,re_b,im_b,re_s,im_s,z")?;
        for (j, t) in self.times.iter().enumerate() {
            let y = self.state(j).to_array();
            write!(out, "{t:.16e}")?;
            for v in y {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Integrates the equations with the probe at detuning `delta` from
/// `initial` at t = 0 up to `t_end` (µs), or to the last sample time if
/// that is later.
pub fn integrate(
    p: &SystemParams,
    delta: f64,
    initial: MeanFieldState,
    t_end: f64,
    opts: &TrajectoryOptions,
) -> Result<Trajectory, OracleError> {
    p.validate()?;
    let reference = opts.reference.unwrap_or(initial);
    let system = DeviationSystem::new(*p, delta, reference);
    let u0: [f64; 7] = std::array::from_fn(|i| initial.to_array()[i] - reference.to_array()[i]);

    let scale = (p.drive.norm() / p.gamma_a).max(p.probe.norm() / p.gamma_a).max(1.0);
    let limit = DIVERGENCE_FACTOR * scale;

    let n = opts.sampling.count;
    let mut times = Vec::with_capacity(n);
    let mut deviations = Vec::with_capacity(n);
    let (u_end, stats) = integrator::integrate(
        |t, u| system.eval(t, u),
        0.0,
        u0,
        t_end.max(opts.sampling.end()),
        &opts.step,
        &opts.sampling,
        |_, t, u| {
            times.push(t);
            deviations.push(*u);
        },
        |_, u| {
            let a = Complex64::new(reference.a.re + u[0], reference.a.im + u[1]).norm();
            if a > limit {
                Err(format!("{a}"))
            } else {
                Ok(())
            }
        },
    )?;
    Ok(Trajectory {
        reference,
        sampling: opts.sampling,
        times,
        deviations,
        final_state: reference.plus(&u_end),
        stats,
    })
}

/// Initial condition of an oracle run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleStart {
    /// At the steady state, so only the probe-induced transient decays.
    #[default]
    SteadyState,
    /// Empty cavity and mechanics with the qubit in |g⟩; needs a longer
    /// transient skip and relies on the flow reaching the chosen branch.
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub step: StepOptions,
    pub start: OracleStart,
    /// Transient skipped before sampling, in units of the slowest decay
    /// time of the linearised dynamics.
    pub transient_relaxations: f64,
    pub n_periods: usize,
    pub samples_per_period: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            step: StepOptions::default(),
            start: OracleStart::SteadyState,
            transient_relaxations: 25.0,
            n_periods: 50,
            samples_per_period: 64,
        }
    }
}

/// Outcome of one time-domain run at a single probe detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub delta: f64,
    pub stability: Stability,
    pub transient: f64,
    pub harmonics: Harmonics,
    pub stats: integrator::Stats,
}

/// Switches the probe on at t = 0 and integrates through the transient
/// and `n_periods` sampled probe periods. Deviations are always taken
/// from the steady state. Returns the stability report, the skipped
/// transient (µs) and the sampled window.
pub fn oracle_trajectory(
    p: &SystemParams,
    steady: &SteadyState,
    delta: f64,
    opts: &OracleOptions,
) -> Result<(Stability, f64, Trajectory), OracleError> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(OracleError::InvalidDetuning(delta));
    }
    let stability = classify_stability(p, steady);
    if !stability.stable {
        return Err(OracleError::Unstable { abscissa: stability.abscissa });
    }
    let transient = opts.transient_relaxations / stability.slowest_decay;
    let period = TAU / delta;
    // Start the window on a whole number of periods so the phase
    // reference e^{iΔt} is well conditioned.
    let start = (transient / period).ceil() * period;
    let m = opts.samples_per_period;
    let sampling = Sampling { start, interval: period / m as f64, count: opts.n_periods * m };
    let t_end = sampling.end();
    let traj_opts = TrajectoryOptions {
        step: StepOptions { h_max: opts.step.h_max.min(period / 4.0), ..opts.step },
        sampling,
        reference: Some(MeanFieldState::from_steady(steady)),
    };
    let initial = match opts.start {
        OracleStart::SteadyState => MeanFieldState::from_steady(steady),
        OracleStart::Ground => MeanFieldState::ground(),
    };
    let traj = integrate(p, delta, initial, t_end, &traj_opts)?;
    Ok((stability, transient, traj))
}

/// [`oracle_trajectory`] followed by projection onto {1, e^{∓iΔt}}.
pub fn run_oracle(
    p: &SystemParams,
    steady: &SteadyState,
    delta: f64,
    opts: &OracleOptions,
) -> Result<OracleRun, OracleError> {
    let (stability, transient, traj) = oracle_trajectory(p, steady, delta, opts)?;
    let harmonics = extract_harmonics(&traj, delta, opts.n_periods)?;
    Ok(OracleRun { delta, stability, transient, harmonics, stats: traj.stats })
}
