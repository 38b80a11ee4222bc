//! Probe transmission from input-output theory: absorption μ_p,
//! dispersion ν_p and the Stokes / anti-Stokes output ratios.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::classify_stability;
use crate::params::{DetuningGrid, SystemParams};
use crate::response::{compute_response, ResponseCoefficients, ResponseError};
use crate::steady::{solve_steady_states, SteadyState, SteadyStateError};

/// Values closer than this count as equal when looking for minima.
pub const PLATEAU_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error(transparent)]
    Steady(#[from] SteadyStateError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error("probe amplitude is zero; normalized outputs are undefined")]
    ZeroProbe,
    #[error("none of the {branches} steady-state branches is stable; pass a branch index to proceed anyway")]
    NoStableBranch { branches: usize },
    #[error("stable branches {stable:?} coexist; pass a branch index")]
    AmbiguousBranch { stable: Vec<usize> },
    #[error("branch index {index} out of range ({count} branches)")]
    BranchOutOfRange { index: usize, count: usize },
    #[error("window analysis needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("detuning spacing {spacing:e} is not below γ_a/10 = {limit:e}")]
    GridTooCoarse { spacing: f64, limit: f64 },
    #[error("spectrum points are not in increasing detuning order")]
    Unsorted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub delta: f64,
    #[serde(rename = "A_d")]
    pub a_d: Complex64,
    #[serde(rename = "A_s")]
    pub a_s: Complex64,
    #[serde(rename = "A_as")]
    pub a_as: Complex64,
    pub eps_t: Complex64,
    pub mu_p: f64,
    pub nu_p: f64,
    #[serde(rename = "G_s")]
    pub g_s: f64,
    #[serde(rename = "G_as")]
    pub g_as: f64,
}

pub fn spectrum_point(
    p: &SystemParams,
    steady: &SteadyState,
    response: &ResponseCoefficients,
) -> Result<SpectrumPoint, SpectraError> {
    let eps = p.probe;
    if eps.norm() == 0.0 {
        return Err(SpectraError::ZeroProbe);
    }
    let root = (2.0 * p.gamma_a).sqrt();
    let a_d = root * steady.a0 - p.drive / root;
    let a_s = root * response.a_minus / eps - 1.0 / root;
    let a_as = root * response.a_plus / eps.conj();
    let eps_t = 2.0 * p.gamma_a * response.a_minus / eps;
    Ok(SpectrumPoint {
        delta: response.delta,
        a_d,
        a_s,
        a_as,
        eps_t,
        mu_p: eps_t.re,
        nu_p: eps_t.im,
        g_s: (root * a_s).norm_sqr(),
        g_as: (root * a_as).norm_sqr(),
    })
}

/// Picks the branch the spectrum is computed on: the given index, or the
/// only linearly stable branch.
pub fn select_branch(p: &SystemParams, branch: Option<usize>) -> Result<(usize, SteadyState), SpectraError> {
    let branches = solve_steady_states(p)?;
    if let Some(index) = branch {
        return branches
            .get(index)
            .map(|s| (index, *s))
            .ok_or(SpectraError::BranchOutOfRange { index, count: branches.len() });
    }
    let stable: Vec<usize> =
        (0..branches.len()).filter(|&i| classify_stability(p, &branches[i]).stable).collect();
    match stable.as_slice() {
        [i] => Ok((*i, branches[*i])),
        [] => Err(SpectraError::NoStableBranch { branches: branches.len() }),
        _ => Err(SpectraError::AmbiguousBranch { stable }),
    }
}

/// Steady state once, then one independent response per detuning.
pub fn spectrum_sweep(
    p: &SystemParams,
    grid: &DetuningGrid,
    branch: Option<usize>,
) -> Result<Vec<SpectrumPoint>, SpectraError> {
    if p.probe.norm() == 0.0 {
        return Err(SpectraError::ZeroProbe);
    }
    let (_, steady) = select_branch(p, branch)?;
    spectrum_on_branch(p, &steady, grid)
}

pub fn spectrum_on_branch(
    p: &SystemParams,
    steady: &SteadyState,
    grid: &DetuningGrid,
) -> Result<Vec<SpectrumPoint>, SpectraError> {
    grid.values()
        .par_iter()
        .map(|&delta| {
            let r = compute_response(p, steady, delta)?;
            spectrum_point(p, steady, &r)
        })
        .collect()
}

/// Transparency windows: local minima of μ_p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub count: usize,
    pub positions: Vec<f64>,
    /// μ_p at each minimum.
    pub depths: Vec<f64>,
    /// Distance between the two minima when there are exactly two.
    pub splitting: Option<f64>,
}

impl WindowReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain numeric struct serializes")
    }
}

pub fn window_analysis(points: &[SpectrumPoint], gamma_a: f64) -> Result<WindowReport, SpectraError> {
    let n = points.len();
    if n < 3 {
        return Err(SpectraError::TooFewPoints(n));
    }
    let limit = gamma_a / 10.0;
    let mut spacing: f64 = 0.0;
    for w in points.windows(2) {
        let d = w[1].delta - w[0].delta;
        if d.is_nan() || d <= 0.0 {
            return Err(SpectraError::Unsorted);
        }
        spacing = spacing.max(d);
    }
    if spacing >= limit {
        return Err(SpectraError::GridTooCoarse { spacing, limit });
    }

    // Collapse runs of equal values so a flat-bottomed minimum counts once.
    let mu: Vec<f64> = points.iter().map(|p| p.mu_p).collect();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || (mu[i] - mu[i - 1]).abs() > PLATEAU_TOL {
            runs.push((start, i - 1));
            start = i;
        }
    }
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for k in 1..runs.len().saturating_sub(1) {
        let (lo, hi) = runs[k];
        let v = mu[lo];
        if mu[runs[k - 1].1] > v && mu[runs[k + 1].0] > v {
            let centre = 0.5 * (points[lo].delta + points[hi].delta);
            minima.push((centre, v));
        }
    }

    let mut merged: Vec<(f64, f64)> = Vec::new();
    for m in minima {
        match merged.last_mut() {
            Some(last) if m.0 - last.0 < gamma_a / 100.0 => {
                if m.1 < last.1 {
                    *last = m;
                }
            }
            _ => merged.push(m),
        }
    }

    let positions: Vec<f64> = merged.iter().map(|m| m.0).collect();
    let depths: Vec<f64> = merged.iter().map(|m| m.1).collect();
    let splitting = (positions.len() == 2).then(|| positions[1] - positions[0]);
    Ok(WindowReport { count: positions.len(), positions, depths, splitting })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{load_params, presets, HZ_TO_CANONICAL};
    use proptest::prelude::*;

    fn fig5(g_hz: f64) -> SystemParams {
        let mut c = presets::spectrum();
        c.g_hz = Some(g_hz);
        load_params(&c).unwrap()
    }

    fn synthetic(mu: &[f64], step: f64) -> Vec<SpectrumPoint> {
        let zero = Complex64::new(0.0, 0.0);
        mu.iter()
            .enumerate()
            .map(|(i, &m)| SpectrumPoint {
                delta: i as f64 * step,
                a_d: zero,
                a_s: zero,
                a_as: zero,
                eps_t: Complex64::new(m, 0.0),
                mu_p: m,
                nu_p: 0.0,
                g_s: 0.0,
                g_as: 0.0,
            })
            .collect()
    }

    #[test]
    fn bare_cavity_on_resonance() {
        let mut p = fig5(0.0);
        p.chi = 0.0;
        p.delta_a = 0.0;
        let s = solve_steady_states(&p).unwrap()[0];
        let r = compute_response(&p, &s, 0.0).unwrap();
        let pt = spectrum_point(&p, &s, &r).unwrap();
        assert!((pt.eps_t - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((pt.mu_p - 2.0).abs() < 1e-14);
        assert!(pt.nu_p.abs() < 1e-14);
        assert!((pt.g_s - 1.0).abs() < 1e-13);
        assert_eq!(pt.g_as, 0.0);
    }

    #[test]
    fn zero_probe_is_an_error() {
        let p = fig5(0.0).with_probe(Complex64::new(0.0, 0.0));
        let grid = DetuningGrid::in_units_of(p.omega_b, 0.9, 1.1, 5).unwrap();
        assert_eq!(spectrum_sweep(&p, &grid, None), Err(SpectraError::ZeroProbe));
    }

    #[test]
    fn single_window_without_qubit() {
        let p = fig5(0.0);
        let grid = DetuningGrid::in_units_of(p.omega_b, 0.8, 1.2, 2001).unwrap();
        let pts = spectrum_sweep(&p, &grid, None).unwrap();
        let w = window_analysis(&pts, p.gamma_a).unwrap();
        assert_eq!(w.count, 1);
        assert!((w.positions[0] / p.omega_b - 1.0).abs() < 1e-3);
        let peak = pts.iter().map(|x| x.mu_p).fold(f64::MIN, f64::max);
        assert!(w.depths[0] < 0.05 * peak);
        assert_eq!(w.splitting, None);
    }

    #[test]
    fn resonant_qubit_splits_the_window() {
        let p = fig5(10e6);
        let grid = DetuningGrid::in_units_of(p.omega_b, 0.8, 1.2, 2001).unwrap();
        let pts = spectrum_sweep(&p, &grid, None).unwrap();
        let w = window_analysis(&pts, p.gamma_a).unwrap();
        assert_eq!(w.count, 2);
        let split = w.splitting.unwrap();
        assert!((split / (2.0 * p.g) - 1.0).abs() < 0.05, "{}", split / (2.0 * p.g));
    }

    #[test]
    fn anti_stokes_needs_the_nonlinearity() {
        let mut p = fig5(10e6);
        p.chi = 0.0;
        let grid = DetuningGrid::in_units_of(p.omega_b, 0.8, 1.2, 41).unwrap();
        for pt in spectrum_sweep(&p, &grid, None).unwrap() {
            assert_eq!(pt.g_as, 0.0);
            assert!(pt.g_s >= 0.0);
        }
        let p = fig5(10e6);
        let small = 1e-6 * p.chi;
        let q = SystemParams { chi: small, ..p };
        let far = spectrum_sweep(&q, &grid, None).unwrap();
        assert!(far.iter().all(|pt| pt.g_as < 1e-15));
    }

    #[test]
    fn detuned_qubit_gives_one_window() {
        for f in [10e6, 200e6] {
            let mut c = presets::spectrum();
            c.omega_q_hz = Some(f);
            let p = load_params(&c).unwrap();
            let grid = DetuningGrid::in_units_of(p.omega_b, 0.7, 1.3, 6001).unwrap();
            let w = window_analysis(&spectrum_sweep(&p, &grid, None).unwrap(), p.gamma_a).unwrap();
            assert_eq!(w.count, 1, "ω_q = {f}");
        }
    }

    #[test]
    fn detuned_qubit_windows_are_asymmetric() {
        let mut c = presets::spectrum();
        c.omega_q_hz = Some(80e6);
        let p = load_params(&c).unwrap();
        let grid = DetuningGrid::in_units_of(p.omega_b, 0.7, 1.3, 6001).unwrap();
        let w = window_analysis(&spectrum_sweep(&p, &grid, None).unwrap(), p.gamma_a).unwrap();
        assert_eq!(w.count, 2);
        assert!((w.depths[0] - w.depths[1]).abs() > 0.1 * w.depths[0].max(w.depths[1]));
    }

    #[test]
    fn window_edge_cases() {
        let monotone: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert_eq!(window_analysis(&synthetic(&monotone, 0.01), 1.0).unwrap().count, 0);

        let flat = [3.0, 2.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        let w = window_analysis(&synthetic(&flat, 0.01), 1.0).unwrap();
        assert_eq!(w.count, 1);
        assert!((w.positions[0] - 0.03).abs() < 1e-15);

        let twin = [3.0, 1.0, 1.5, 0.9, 3.0];
        let w = window_analysis(&synthetic(&twin, 0.001), 1.0).unwrap();
        assert_eq!(w.count, 1);
        assert_eq!(w.depths, vec![0.9]);

        assert!(matches!(window_analysis(&synthetic(&twin, 0.2), 1.0), Err(SpectraError::GridTooCoarse { limit, .. }) if limit == 0.1));
        assert_eq!(window_analysis(&synthetic(&[1.0, 0.0], 0.01), 1.0), Err(SpectraError::TooFewPoints(2)));
        let json = window_analysis(&synthetic(&[2.0, 1.0, 2.0, 1.0, 2.0], 0.05), 1.0).unwrap().to_json();
        assert_eq!(json, r#"{"count":2,"positions":[0.05,0.15000000000000002],"depths":[1.0,1.0],"splitting":0.10000000000000002}"#);
    }

    #[test]
    fn branch_selection() {
        let mut p = load_params(&presets::photon_bistability()).unwrap();
        p.drive = Complex64::new(60e6 * HZ_TO_CANONICAL, 0.0);
        p.probe = p.drive * 1e-4;
        let (idx, s) = select_branch(&p, None).unwrap();
        assert_eq!(idx, 0);
        let all = solve_steady_states(&p).unwrap();
        assert_eq!(s, all[0]);
        assert_eq!(select_branch(&p, Some(2)).unwrap().1, all[2]);
        assert_eq!(select_branch(&p, Some(3)), Err(SpectraError::BranchOutOfRange { index: 3, count: 3 }));

        let mut c = presets::phonon_bistability();
        c.drive_hz = Some(40e6);
        let q = load_params(&c).unwrap();
        assert_eq!(select_branch(&q, None), Err(SpectraError::NoStableBranch { branches: 1 }));
    }

    proptest! {
        #[test]
        fn normalized_outputs_ignore_probe_strength(k in 1e-3f64..=1.0, f in 0.8f64..1.2) {
            let p = fig5(10e6);
            let q = p.with_probe(p.probe * k);
            let s = solve_steady_states(&p).unwrap()[0];
            let a = spectrum_point(&p, &s, &compute_response(&p, &s, f * p.omega_b).unwrap()).unwrap();
            let b = spectrum_point(&q, &s, &compute_response(&q, &s, f * p.omega_b).unwrap()).unwrap();
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300);
            prop_assert!(close(a.mu_p, b.mu_p));
            prop_assert!(close(a.nu_p, b.nu_p));
            prop_assert!(close(a.g_s, b.g_s));
            prop_assert!(close(a.g_as, b.g_as));
            prop_assert!((a.eps_t - b.eps_t).norm() <= 1e-12 * a.eps_t.norm());
            prop_assert_eq!(a.mu_p, a.eps_t.re);
            prop_assert_eq!(a.nu_p, a.eps_t.im);
        }
    }
}
