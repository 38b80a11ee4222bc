//! First-order probe response: the sideband amplitudes at e^{∓iΔt}.
//!
//! Coefficients are built once per detuning along a fixed dependency
//! chain: λ₁ → D₁..D₃ → λ₂..λ₅ → D₄, D₅ → λ₆, λ₇ → λ₈..λ₁₀ → A± → B± →
//! L± → Z±.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{DetuningGrid, SystemParams};
use crate::steady::SteadyState;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this magnitude λ₈λ₉ − λ₁₀ is treated as an exact pole.
pub const SINGULAR_DENOMINATOR: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("singular response at delta = {delta}: |lambda8 lambda9 - lambda10| = {magnitude:e}")]
    Singular { delta: f64, magnitude: f64 },
    #[error("non-finite response coefficient at delta = {delta}")]
    NonFinite { delta: f64 },
}

/// Mean-field cavity frequency shift used inside λ₈ and λ₉.
///
/// Linearizing iχa(b + b*) around the steady state shifts the cavity by
/// χ(B₀ + B₀*) at both sidebands, the same shift that appears in A₀.
/// [`SplitAmplitude`](Self::SplitAmplitude) carries χB₀ in λ₈ and χB₀* in
/// λ₉ instead; it is kept selectable for comparison against the
/// time-domain oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityShift {
    #[default]
    RealPart,
    SplitAmplitude,
}

/// The full first-order coefficient chain at one detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseCoefficients {
    pub delta: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub lambda3: Complex64,
    pub lambda4: Complex64,
    pub lambda5: Complex64,
    pub lambda6: Complex64,
    pub lambda7: Complex64,
    pub lambda8: Complex64,
    pub lambda9: Complex64,
    pub lambda10: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
    pub d4: Complex64,
    pub d5: Complex64,
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub b_plus: Complex64,
    pub b_minus: Complex64,
    pub l_plus: Complex64,
    pub l_minus: Complex64,
    pub z_plus: Complex64,
    pub z_minus: Complex64,
}

impl ResponseCoefficients {
    /// Pretty JSON with every complex value as a `[re, im]` pair.
    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric struct serializes")
    }
}

pub fn compute_response(
    p: &SystemParams,
    steady: &SteadyState,
    delta: f64,
) -> Result<ResponseCoefficients, ResponseError> {
    compute_response_with(p, steady, delta, CavityShift::default())
}

pub fn compute_response_with(
    p: &SystemParams,
    steady: &SteadyState,
    delta: f64,
    shift: CavityShift,
) -> Result<ResponseCoefficients, ResponseError> {
    let SystemParams { omega_b, omega_q, delta_a, chi, g, gamma_a, gamma_b, gamma_q, probe, .. } = *p;
    let SteadyState { a0, b0, l0, z0, .. } = *steady;
    let half_q = gamma_q / 2.0;
    let b0_sq = b0.norm_sqr();
    let a0_sq = a0.norm_sqr();

    let lambda1 = 2.0 * g / Complex64::new(delta, -gamma_q);
    let l1c = lambda1.conj();

    let d1 = Complex64::new(half_q, -omega_q) - I * g * lambda1 * b0_sq + I * delta;
    let d2 = Complex64::new(half_q, -omega_q) + I * g * l1c * b0_sq - I * delta;
    let rot = Complex64::new(half_q, delta);
    let d3 = rot * rot - 2.0 * I * g * lambda1 * b0_sq * rot + omega_q * omega_q;

    let lambda2 = (I * g * z0 * d1 - g * lambda1 * b0 * l0.conj() * (I * d1 - g * lambda1 * b0_sq)) / d3;
    let lambda3 = I * g * lambda1 * b0 / d3 * (I * g * lambda1 * b0_sq * l0 + I * g * b0 * z0 + d1 * l0);
    let lambda4 =
        (I * g * z0 * d2 + g * l1c * b0 * l0.conj() * (I * d2 + g * l1c * b0_sq)) / d3.conj();
    let lambda5 = I * g * l1c * b0 / d3.conj() * (I * g * l1c * b0_sq * l0 - I * g * b0 * z0 - d2 * l0);

    let d4 = gamma_b - I * (omega_b - delta + g * lambda4.conj());
    let d5 = gamma_b + I * (omega_b + delta + g * lambda2);

    let lambda6 = (-g * chi * lambda3 + I * chi * d4) / (d4 * d5 - g * g * lambda3 * lambda5.conj());
    let lambda7 = (-g * chi * lambda5 + I * chi * d5.conj())
        / (d4.conj() * d5.conj() - g * g * lambda3.conj() * lambda5);

    let mixing = lambda6.conj() + lambda7;
    let (shift_minus, shift_plus) = match shift {
        CavityShift::RealPart => {
            let s = Complex64::new(2.0 * b0.re, 0.0);
            (s, s)
        }
        CavityShift::SplitAmplitude => (b0, b0.conj()),
    };
    let lambda8 = gamma_a + I * (delta_a - delta - chi * shift_minus - chi * mixing * a0_sq);
    let lambda9 = gamma_a - I * (delta_a + delta - chi * shift_plus - chi * mixing * a0_sq);
    let lambda10 = chi * chi * mixing * mixing * a0_sq * a0_sq;

    let denom = lambda8 * lambda9 - lambda10;
    if !denom.is_finite() {
        return Err(ResponseError::NonFinite { delta });
    }
    if denom.norm() < SINGULAR_DENOMINATOR {
        return Err(ResponseError::Singular { delta, magnitude: denom.norm() });
    }

    let a_minus = lambda9 * probe / denom;
    let a_plus = I * chi * (lambda6 + lambda7.conj()) * a0 * a0 * probe.conj() / denom.conj();

    let b_plus = lambda6 * (a0.conj() * a_plus + a0 * a_minus.conj());
    let b_minus = lambda7 * (a0.conj() * a_minus + a0 * a_plus.conj());
    let l_plus = lambda2 * b_plus + lambda3 * b_minus.conj();
    let l_minus = lambda4 * b_minus + lambda5 * b_plus.conj();
    let z_plus = -lambda1 * (b0 * l_minus.conj() + l0.conj() * b_plus - b0.conj() * l_plus - l0 * b_minus.conj());
    let z_minus = l1c * (b0 * l_plus.conj() + l0.conj() * b_minus - b0.conj() * l_minus - l0 * b_plus.conj());

    let out = ResponseCoefficients {
        delta,
        lambda1,
        lambda2,
        lambda3,
        lambda4,
        lambda5,
        lambda6,
        lambda7,
        lambda8,
        lambda9,
        lambda10,
        d1,
        d2,
        d3,
        d4,
        d5,
        a_plus,
        a_minus,
        b_plus,
        b_minus,
        l_plus,
        l_minus,
        z_plus,
        z_minus,
    };
    if [a_minus, a_plus, b_plus, b_minus, l_plus, l_minus, z_plus, z_minus]
        .iter()
        .any(|c| !c.is_finite())
    {
        return Err(ResponseError::NonFinite { delta });
    }
    Ok(out)
}

/// One independent evaluation per grid point, in grid order.
pub fn response_sweep(
    p: &SystemParams,
    steady: &SteadyState,
    grid: &DetuningGrid,
) -> Result<Vec<ResponseCoefficients>, ResponseError> {
    grid.values()
        .par_iter()
        .map(|&delta| compute_response(p, steady, delta))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{load_params, presets, ParamsConfig};
    use crate::steady::solve_steady_states;

    fn spectrum(g_hz: f64) -> SystemParams {
        load_params(&ParamsConfig { g_hz: Some(g_hz), ..presets::spectrum() }).unwrap()
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn qubit_decoupled_reduces_to_bare_mechanics() {
        let p = spectrum(0.0);
        let s = solve_steady_states(&p).unwrap()[0];
        for delta in [0.8 * p.omega_b, p.omega_b, 1.13 * p.omega_b] {
            let r = compute_response(&p, &s, delta).unwrap();
            for l in [r.lambda2, r.lambda3, r.lambda4, r.lambda5] {
                assert_eq!(l, Complex64::new(0.0, 0.0));
            }
            let d5 = Complex64::new(p.gamma_b, p.omega_b + delta);
            let d4c = Complex64::new(p.gamma_b, p.omega_b - delta);
            assert!(rel(r.d5, d5) < 1e-12);
            assert!(rel(r.d4.conj(), d4c) < 1e-12);
            assert!(rel(r.lambda6, I * p.chi / d5) < 1e-12);
            assert!(rel(r.lambda7, I * p.chi / d4c) < 1e-12);
        }
    }

    #[test]
    fn no_optomechanics_gives_bare_cavity() {
        let mut p = spectrum(10e6);
        p.chi = 0.0;
        let s = solve_steady_states(&p).unwrap()[0];
        for delta in [0.9 * p.omega_b, p.omega_b, 1.2 * p.omega_b] {
            let r = compute_response(&p, &s, delta).unwrap();
            assert_eq!(r.a_plus, Complex64::new(0.0, 0.0));
            assert_eq!(r.lambda10, Complex64::new(0.0, 0.0));
            let expected = p.probe / Complex64::new(p.gamma_a, p.delta_a - delta);
            assert!(rel(r.a_minus, expected) < 1e-12);
        }
    }

    #[test]
    fn undriven_response_is_single_lorentzian() {
        let p = spectrum(10e6).with_drive(Complex64::new(0.0, 0.0));
        let s = solve_steady_states(&p).unwrap()[0];
        let r = compute_response(&p, &s, 0.95 * p.omega_b).unwrap();
        assert_eq!(r.lambda10, Complex64::new(0.0, 0.0));
        assert!(rel(r.a_minus, p.probe / r.lambda8) < 1e-14);
    }

    #[test]
    fn inversion_sidebands_are_conjugate() {
        let p = spectrum(10e6);
        let s = solve_steady_states(&p).unwrap()[0];
        for k in 0..50 {
            let delta = p.omega_b * (0.8 + 0.4 * k as f64 / 49.0);
            let r = compute_response(&p, &s, delta).unwrap();
            let scale = r.z_minus.norm().max(f64::MIN_POSITIVE);
            assert!((r.z_plus - r.z_minus.conj()).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn probe_linearity() {
        let p = spectrum(10e6);
        let s = solve_steady_states(&p).unwrap()[0];
        let r1 = compute_response(&p, &s, 1.03 * p.omega_b).unwrap();
        let r2 = compute_response(&p.with_probe(p.probe * 2.0), &s, 1.03 * p.omega_b).unwrap();
        assert!(rel(r2.a_minus, 2.0 * r1.a_minus) < 1e-15);
        assert!(rel(r2.a_plus, 2.0 * r1.a_plus) < 1e-15);
    }

    #[test]
    fn sweep_preserves_order_and_purity() {
        let p = spectrum(10e6);
        let s = solve_steady_states(&p).unwrap()[0];
        let grid = DetuningGrid::in_units_of(p.omega_b, 0.8, 1.2, 2001).unwrap();
        let forward = response_sweep(&p, &s, &grid).unwrap();
        assert_eq!(forward.len(), 2001);
        let backward: Vec<_> = grid
            .values()
            .iter()
            .rev()
            .map(|&d| compute_response(&p, &s, d).unwrap())
            .collect();
        for (f, b) in forward.iter().zip(backward.iter().rev()) {
            assert_eq!(f, b);
        }
        let single = DetuningGrid::new(vec![p.omega_b]).unwrap();
        assert_eq!(response_sweep(&p, &s, &single).unwrap().len(), 1);
    }

    #[test]
    fn debug_dump_carries_every_coefficient() {
        let p = spectrum(10e6);
        let s = solve_steady_states(&p).unwrap()[0];
        let r = compute_response(&p, &s, p.omega_b).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_debug_json()).unwrap();
        for key in ["lambda1", "lambda10", "d3", "d5", "a_minus", "z_plus"] {
            let pair = v[key].as_array().unwrap();
            assert_eq!(pair.len(), 2);
        }
        assert_eq!(v["a_minus"][0].as_f64().unwrap(), r.a_minus.re);
    }
}
