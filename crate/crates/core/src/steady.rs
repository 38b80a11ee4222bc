//! Zeroth-order (drive-only) steady state of the mean-field equations.
//!
//! For a trial photon number x = |A₀|² the mechanical amplitude follows
//! in closed form once the qubit inversion Z₀ is known, and Z₀ itself is
//! a one-dimensional fixed point on [−1, 0). The remaining scalar
//! condition
//!
//! ```text
//! x · (γ_a² + (Δ_a − 2χ Re B₀(x))²) = |Ω|²
//! ```
//!
//! is bracketed on a grid and refined by bisection. Since the bracket
//! term is at least γ_a², every root lies in (0, |Ω|²/γ_a²].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ParamsError, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyStateError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("inversion fixed point did not converge within {iterations} iterations at |A0|^2 = {x}")]
    InversionNotConverged { x: f64, iterations: usize },
    #[error("no sign change of the consistency equation on (0, {x_max}]; widen the photon-number grid")]
    EmptyBracket { x_max: f64 },
    #[error("steady-state residual {residual:e} exceeds tolerance {tolerance:e} at |A0|^2 = {x}")]
    Residual { x: f64, residual: f64, tolerance: f64 },
}

/// One self-consistent drive-only solution branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub a0: Complex64,
    pub b0: Complex64,
    pub l0: Complex64,
    pub z0: f64,
    /// Largest amplitude-level defect when the solution is substituted
    /// back into the four steady-state relations.
    pub residual: f64,
}

impl SteadyState {
    /// The undriven state: empty cavity and mechanics, qubit in |g⟩.
    pub fn trivial() -> Self {
        Self {
            a0: Complex64::new(0.0, 0.0),
            b0: Complex64::new(0.0, 0.0),
            l0: Complex64::new(0.0, 0.0),
            z0: -1.0,
            residual: 0.0,
        }
    }

    pub fn photon_number(&self) -> f64 {
        self.a0.norm_sqr()
    }

    pub fn phonon_number(&self) -> f64 {
        self.b0.norm_sqr()
    }
}

/// How Z₀ is obtained when evaluating at a given photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionMode {
    /// Z₀ held at the given value.
    Fixed(f64),
    /// Z₀ solved self-consistently with |B₀|².
    SelfConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Number of photon-number grid points in the bracketing scan.
    pub grid_points: usize,
    /// Share of grid points placed linearly on [0, 1]; the rest are
    /// logarithmic above 1.
    pub linear_fraction: f64,
    /// Overrides the automatic upper bound |Ω|²/γ_a² of the scan.
    pub x_max: Option<f64>,
    /// Relative bisection width at which a root is accepted.
    pub bisection_rel_tol: f64,
    pub inversion_max_iter: usize,
    pub inversion_damping: f64,
    pub inversion_tol: f64,
    /// Roots closer than this (relative in x) are merged.
    pub merge_rel_tol: f64,
    /// Maximum accepted steady-state residual.
    pub residual_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_points: 2000,
            linear_fraction: 0.25,
            x_max: None,
            bisection_rel_tol: 1e-14,
            inversion_max_iter: 200,
            inversion_damping: 0.5,
            inversion_tol: 1e-15,
            merge_rel_tol: 1e-8,
            residual_tol: 1e-10,
        }
    }
}

/// γ_q² + 4ω_q², the qubit scale appearing in the inversion relation.
pub fn qubit_scale(p: &SystemParams) -> f64 {
    p.gamma_q * p.gamma_q + 4.0 * p.omega_q * p.omega_q
}

/// B₀ = χx / (ω_b − iγ_b + 2g²Z₀/(2ω_q − iγ_q)).
pub fn mechanical_amplitude(p: &SystemParams, x: f64, z0: f64) -> Complex64 {
    let qubit_pull = 2.0 * p.g * p.g * z0 / Complex64::new(2.0 * p.omega_q, -p.gamma_q);
    p.chi * x / (Complex64::new(p.omega_b, -p.gamma_b) + qubit_pull)
}

/// Z₀ = −(γ_q² + 4ω_q²) / (γ_q² + 4ω_q² + 8g²|B₀|²), always in [−1, 0).
pub fn inversion_for(p: &SystemParams, phonon_number: f64) -> f64 {
    let e = qubit_scale(p);
    -e / (e + 8.0 * p.g * p.g * phonon_number)
}

/// L₀ = 2gB₀Z₀ / (2ω_q − iγ_q).
pub fn qubit_coherence(p: &SystemParams, b0: Complex64, z0: f64) -> Complex64 {
    2.0 * p.g * b0 * z0 / Complex64::new(2.0 * p.omega_q, -p.gamma_q)
}

/// A₀ = Ω / (γ_a + iΔ_a − iχ(B₀ + B₀*)).
pub fn cavity_amplitude(p: &SystemParams, b0: Complex64) -> Complex64 {
    p.drive / Complex64::new(p.gamma_a, p.delta_a - 2.0 * p.chi * b0.re)
}

/// Solves the Z₀ fixed point at photon number `x` by damped iteration
/// from Z₀ = −1. Returns (Z₀, B₀).
pub fn solve_inversion(
    p: &SystemParams,
    x: f64,
    opts: &SolverOptions,
) -> Result<(f64, Complex64), SteadyStateError> {
    let mut z = -1.0;
    for _ in 0..opts.inversion_max_iter {
        let b = mechanical_amplitude(p, x, z);
        let target = inversion_for(p, b.norm_sqr());
        let next = (1.0 - opts.inversion_damping) * target + opts.inversion_damping * z;
        if (next - z).abs() <= opts.inversion_tol || (target - z).abs() <= opts.inversion_tol {
            let z = target;
            return Ok((z, mechanical_amplitude(p, x, z)));
        }
        z = next;
    }
    Err(SteadyStateError::InversionNotConverged { x, iterations: opts.inversion_max_iter })
}

/// Evaluates (Z₀, B₀) at photon number `x` in the requested mode.
pub fn inversion_and_phonon(
    p: &SystemParams,
    x: f64,
    mode: InversionMode,
    opts: &SolverOptions,
) -> Result<(f64, Complex64), SteadyStateError> {
    match mode {
        InversionMode::Fixed(z) => Ok((z, mechanical_amplitude(p, x, z))),
        InversionMode::SelfConsistent => solve_inversion(p, x, opts),
    }
}

fn consistency(p: &SystemParams, x: f64, opts: &SolverOptions) -> Result<f64, SteadyStateError> {
    let (_, b0) = solve_inversion(p, x, opts)?;
    let detuning = p.delta_a - 2.0 * p.chi * b0.re;
    Ok(x * (p.gamma_a * p.gamma_a + detuning * detuning) - p.drive.norm_sqr())
}

fn scan_grid(x_max: f64, opts: &SolverOptions) -> Vec<f64> {
    let n = opts.grid_points.max(3);
    if x_max <= 1.0 {
        return crate::params::linspace(0.0, x_max, n);
    }
    let n_lin = ((n as f64 * opts.linear_fraction).round() as usize).clamp(2, n - 1);
    let n_log = n - n_lin + 1;
    let mut grid = crate::params::linspace(0.0, 1.0, n_lin);
    let log_hi = x_max.ln();
    grid.extend((1..n_log).map(|i| {
        if i == n_log - 1 {
            x_max
        } else {
            (log_hi * i as f64 / (n_log - 1) as f64).exp()
        }
    }));
    grid
}

fn bisect(
    p: &SystemParams,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    opts: &SolverOptions,
) -> Result<f64, SteadyStateError> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= opts.bisection_rel_tol * hi {
            break;
        }
        let f_mid = consistency(p, mid, opts)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Assembles the full steady state at a converged photon number.
pub fn state_at(
    p: &SystemParams,
    x: f64,
    opts: &SolverOptions,
) -> Result<SteadyState, SteadyStateError> {
    let (z0, b0) = solve_inversion(p, x, opts)?;
    let l0 = qubit_coherence(p, b0, z0);
    let a0 = cavity_amplitude(p, b0);
    let mut s = SteadyState { a0, b0, l0, z0, residual: 0.0 };
    s.residual = residual(p, &s);
    Ok(s)
}

/// Largest defect of the four steady-state relations, each written as
/// `amplitude − formula(other amplitudes)`.
pub fn residual(p: &SystemParams, s: &SteadyState) -> f64 {
    let coherence = (s.l0 - qubit_coherence(p, s.b0, s.z0)).norm();
    let inversion = (s.z0 - inversion_for(p, s.b0.norm_sqr())).abs();
    let mechanics = (s.b0
        - (p.chi * s.a0.norm_sqr() - p.g * s.l0) / Complex64::new(p.omega_b, -p.gamma_b))
    .norm();
    let cavity = (s.a0 - p.drive / (p.gamma_a + I * p.delta_a - I * p.chi * (s.b0 + s.b0.conj())))
        .norm();
    coherence.max(inversion).max(mechanics).max(cavity)
}

/// Every real steady-state branch, sorted by |A₀|².
pub fn solve_steady_states(p: &SystemParams) -> Result<Vec<SteadyState>, SteadyStateError> {
    solve_steady_states_with(p, &SolverOptions::default())
}

pub fn solve_steady_states_with(
    p: &SystemParams,
    opts: &SolverOptions,
) -> Result<Vec<SteadyState>, SteadyStateError> {
    p.validate()?;
    let drive_sq = p.drive.norm_sqr();
    if drive_sq == 0.0 {
        return Ok(vec![SteadyState::trivial()]);
    }
    let x_max = opts.x_max.unwrap_or(drive_sq / (p.gamma_a * p.gamma_a));
    let grid = scan_grid(x_max, opts);

    let mut roots: Vec<f64> = Vec::new();
    let mut prev_x = grid[0];
    let mut prev_f = consistency(p, prev_x, opts)?;
    for &x in &grid[1..] {
        let f = consistency(p, x, opts)?;
        if f == 0.0 {
            roots.push(x);
        } else if prev_f != 0.0 && (f < 0.0) != (prev_f < 0.0) {
            roots.push(bisect(p, prev_x, x, prev_f, opts)?);
        }
        prev_x = x;
        prev_f = f;
    }
    if roots.is_empty() {
        return Err(SteadyStateError::EmptyBracket { x_max });
    }

    roots.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for x in roots {
        match merged.last() {
            Some(&last) if (x - last).abs() <= opts.merge_rel_tol * x.abs().max(last.abs()) => {}
            _ => merged.push(x),
        }
    }

    merged
        .into_iter()
        .map(|x| {
            let s = state_at(p, x, opts)?;
            if s.residual > opts.residual_tol {
                return Err(SteadyStateError::Residual {
                    x,
                    residual: s.residual,
                    tolerance: opts.residual_tol,
                });
            }
            Ok(s)
        })
        .collect()
}

/// Number of steady branches at each drive magnitude |Ω| (rad/µs); the
/// drive phase of `p` is kept.
pub fn count_real_solutions(
    p: &SystemParams,
    omega_grid: &[f64],
) -> Result<Vec<usize>, SteadyStateError> {
    let phase = if p.drive.norm() > 0.0 { p.drive / p.drive.norm() } else { Complex64::new(1.0, 0.0) };
    omega_grid
        .iter()
        .map(|&omega| {
            let q = p.with_drive(phase * omega);
            solve_steady_states(&q).map(|branches| branches.len())
        })
        .collect()
}
