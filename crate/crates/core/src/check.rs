//! Formula-versus-oracle comparison of the probe sidebands.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::{classify_stability, run_oracle, OracleError, OracleOptions, Stability};
use crate::params::{SystemParams, LINEAR_RESPONSE_RATIO};
use crate::response::{compute_response, ResponseError};
use crate::spectra::{select_branch, SpectraError};
use crate::steady::{solve_steady_states, SteadyStateError};

/// A sideband below this fraction of its partner counts as absent (as
/// A₊ does without the optomechanical coupling); its error is then
/// measured against the partner instead of itself.
pub const ABSENT_SIDEBAND: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error(transparent)]
    Steady(#[from] SteadyStateError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("branch {branch} is unstable (largest Re λ = {:e}); refusing to compare", stability.abscissa)]
    Unstable { branch: usize, stability: Stability },
    #[error("eps_ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),
    #[error("drive amplitude is zero; eps_ratio has no reference")]
    ZeroDrive,
    #[error("no detunings given")]
    NoDetunings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckPoint {
    pub delta: f64,
    pub delta_over_omega_b: f64,
    pub formula_minus: Complex64,
    pub oracle_minus: Complex64,
    pub formula_plus: Complex64,
    pub oracle_plus: Complex64,
    pub err_minus: f64,
    pub err_plus: f64,
    /// Static cavity amplitude and mechanical sidebands, for information.
    pub err_a0: f64,
    pub err_b_minus: f64,
    pub err_b_plus: f64,
    /// Power outside the three lines relative to the A₋ line power.
    pub leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub eps_ratio: f64,
    pub threshold: f64,
    /// False when eps_ratio exceeds the first-order regime; failures are
    /// then expected and the report is informational.
    pub linear_regime: bool,
    pub branch: usize,
    pub stability: Stability,
    pub points: Vec<CheckPoint>,
    pub max_error: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric struct serializes")
    }
}

fn rel(got: Complex64, want: Complex64, partner: Complex64) -> f64 {
    let scale = if want.norm() < ABSENT_SIDEBAND * partner.norm() { partner.norm() } else { want.norm() };
    (got - want).norm() / scale.max(f64::MIN_POSITIVE)
}

/// Runs the oracle at every detuning with ε = eps_ratio·Ω and compares
/// A₋, A₊ to the first-order formulas. Pass threshold is eps_ratio.
pub fn oracle_check(
    params: &SystemParams,
    deltas: &[f64],
    eps_ratio: f64,
    branch: Option<usize>,
    opts: &OracleOptions,
) -> Result<CheckReport, CheckError> {
    if !(eps_ratio.is_finite() && eps_ratio > 0.0) {
        return Err(CheckError::InvalidRatio(eps_ratio));
    }
    if params.drive.norm() == 0.0 {
        return Err(CheckError::ZeroDrive);
    }
    if deltas.is_empty() {
        return Err(CheckError::NoDetunings);
    }
    let p = params.with_probe(params.drive * eps_ratio);
    let branches = solve_steady_states(&p)?;
    let (index, steady) = match branch {
        Some(_) => select_branch(&p, branch)?,
        None if branches.len() == 1 => (0, branches[0]),
        None => select_branch(&p, None)?,
    };
    let stability = classify_stability(&p, &steady);
    if !stability.stable {
        return Err(CheckError::Unstable { branch: index, stability });
    }
    if eps_ratio > LINEAR_RESPONSE_RATIO {
        log::warn!("eps_ratio {eps_ratio} is outside the first-order regime; expect the comparison to fail");
    }

    let points: Vec<CheckPoint> = deltas
        .par_iter()
        .map(|&delta| -> Result<CheckPoint, CheckError> {
            let r = compute_response(&p, &steady, delta)?;
            let run = run_oracle(&p, &steady, delta, opts)?;
            let h = &run.harmonics;
            Ok(CheckPoint {
                delta,
                delta_over_omega_b: delta / p.omega_b,
                formula_minus: r.a_minus,
                oracle_minus: h.a.minus,
                formula_plus: r.a_plus,
                oracle_plus: h.a.plus,
                err_minus: rel(h.a.minus, r.a_minus, r.a_plus),
                err_plus: rel(h.a.plus, r.a_plus, r.a_minus),
                err_a0: rel(h.a.dc, steady.a0, r.a_minus),
                err_b_minus: rel(h.b.minus, r.b_minus, r.b_plus),
                err_b_plus: rel(h.b.plus, r.b_plus, r.b_minus),
                leakage: h.leakage,
            })
        })
        .collect::<Result<_, _>>()?;

    let max_error = points.iter().map(|c| c.err_minus.max(c.err_plus)).fold(0.0, f64::max);
    let threshold = eps_ratio;
    Ok(CheckReport {
        eps_ratio,
        threshold,
        linear_regime: eps_ratio <= LINEAR_RESPONSE_RATIO,
        branch: index,
        stability,
        points,
        max_error,
        pass: max_error <= threshold,
    })
}
