//! Drive strength as an explicit function of the steady state: the
//! photon-number S-curve |Ω|(|A₀|²) and the phonon relation |Ω|²(B₀).
//!
//! Both curves are parameterized by the real photon number x = |A₀|².
//! With the auxiliary coefficients ε₁..ε₅ the mechanical amplitude on the
//! physical branch is B₀ = χxε₃ / (ε₅ − iε₄), so the phonon relation has
//! a real right-hand side up to rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::SystemParams;
use crate::steady::{inversion_and_phonon, inversion_for, InversionMode, SolverOptions, SteadyStateError};

/// Relative imaginary defect above which a phonon sample is off-branch.
pub const PHONON_DEFECT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BistabilityError {
    #[error(transparent)]
    Steady(#[from] SteadyStateError),
    #[error("photon-number grid must be finite, nonnegative and strictly increasing")]
    InvalidGrid,
    #[error("fixed inversion Z0 = {0} outside [-1, 0)")]
    InvalidInversion(f64),
    #[error("phonon relation has relative imaginary defect {defect:e} at |A0|^2 = {x} (off the physical branch)")]
    OffBranch { x: f64, defect: f64 },
}

/// Which damping enters the qubit scale of ε₁..ε₅.
///
/// Eliminating L₀ between the steady-state relations gives γ_q² + 4ω_q²
/// and 2γ_q g²Z₀. [`QubitDamping`](Self::QubitDamping) is that
/// self-consistent choice and the default; [`CavityDamping`](Self::CavityDamping)
/// puts γ_a in both places and is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleReading {
    #[default]
    QubitDamping,
    CavityDamping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistabilityCoefficients {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps4: f64,
    pub eps5: f64,
    /// Z₀ the coefficients were evaluated at.
    pub z0_fixed: f64,
}

impl BistabilityCoefficients {
    pub fn new(p: &SystemParams, z0: f64, reading: ScaleReading) -> Self {
        let damping = match reading {
            ScaleReading::QubitDamping => p.gamma_q,
            ScaleReading::CavityDamping => p.gamma_a,
        };
        let eps3 = damping * damping + 4.0 * p.omega_q * p.omega_q;
        let g2z = p.g * p.g * z0;
        let eps1 = p.gamma_b * eps3 - 2.0 * damping * g2z;
        let eps2 = p.omega_b * eps3 + 4.0 * p.omega_q * g2z;
        Self { eps1, eps2, eps3, eps4: eps1, eps5: eps2, z0_fixed: z0 }
    }

    /// B₀ on the physical branch at photon number `x`.
    pub fn phonon_amplitude(&self, chi: f64, x: f64) -> Complex64 {
        chi * x * self.eps3 / Complex64::new(self.eps5, -self.eps4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// |A₀|² on photon curves, |B₀|² on phonon curves.
    pub x: f64,
    /// Drive magnitude |Ω| in rad/µs.
    pub omega_abs: f64,
    /// Index of the monotone segment this sample belongs to.
    pub branch_id: usize,
    pub z0: f64,
    /// Photon curves: |Z₀ − Z₀(|B₀|²)|, the inversion self-consistency
    /// defect. Phonon curves: relative imaginary part of |Ω|².
    pub defect: f64,
    pub photon_number: f64,
    pub b0: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Photon,
    Phonon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BistabilityCurve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
}

impl BistabilityCurve {
    pub fn x_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn omega_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.omega_abs).collect()
    }

    /// Number of monotone segments.
    pub fn segment_count(&self) -> usize {
        self.points.last().map_or(0, |p| p.branch_id + 1)
    }

    pub fn is_monotone(&self) -> bool {
        self.segment_count() <= 1
    }

    /// Drive magnitudes at the turning points, in order of increasing x.
    pub fn turning_points(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .filter(|w| w[1].branch_id != w[0].branch_id)
            .map(|w| w[0].omega_abs)
            .collect()
    }

    /// The |Ω| interval over which the inverse x(|Ω|) is multivalued.
    pub fn multivalued_window(&self) -> Option<(f64, f64)> {
        let turns = self.turning_points();
        if turns.len() < 2 {
            return None;
        }
        let lo = turns.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = turns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

fn validate_grid(x_grid: &[f64]) -> Result<(), BistabilityError> {
    let ok = x_grid.iter().all(|x| x.is_finite() && *x >= 0.0)
        && x_grid.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(BistabilityError::InvalidGrid)
    }
}

fn validate_mode(mode: InversionMode) -> Result<(), BistabilityError> {
    match mode {
        InversionMode::Fixed(z) if !(-1.0..0.0).contains(&z) => Err(BistabilityError::InvalidInversion(z)),
        _ => Ok(()),
    }
}

/// Labels monotone segments; a turning point closes the segment it ends.
fn label_segments(points: &mut [CurvePoint]) {
    let mut label = 0;
    let mut direction = 0.0_f64;
    for i in 1..points.len() {
        let step = points[i].omega_abs - points[i - 1].omega_abs;
        let d = if step > 0.0 {
            1.0
        } else if step < 0.0 {
            -1.0
        } else {
            direction
        };
        if direction != 0.0 && d != direction {
            label += 1;
        }
        direction = d;
        points[i].branch_id = label;
    }
}

fn coefficients_at(
    p: &SystemParams,
    x: f64,
    mode: InversionMode,
    reading: ScaleReading,
    opts: &SolverOptions,
) -> Result<BistabilityCoefficients, BistabilityError> {
    let (z0, _) = inversion_and_phonon(p, x, mode, opts)?;
    Ok(BistabilityCoefficients::new(p, z0, reading))
}

/// |Ω| as a function of |A₀|² (default reading and solver options).
pub fn photon_bistability_curve(
    p: &SystemParams,
    x_grid: &[f64],
    mode: InversionMode,
) -> Result<BistabilityCurve, BistabilityError> {
    photon_bistability_curve_with(p, x_grid, mode, ScaleReading::default(), &SolverOptions::default())
}

pub fn photon_bistability_curve_with(
    p: &SystemParams,
    x_grid: &[f64],
    mode: InversionMode,
    reading: ScaleReading,
    opts: &SolverOptions,
) -> Result<BistabilityCurve, BistabilityError> {
    p.validate().map_err(SteadyStateError::from)?;
    validate_grid(x_grid)?;
    validate_mode(mode)?;
    let mut points = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let c = coefficients_at(p, x, mode, reading, opts)?;
        let shift = 2.0 * p.chi * p.chi * c.eps2 * x * c.eps3 / (c.eps1 * c.eps1 + c.eps2 * c.eps2);
        let detuning = p.delta_a - shift;
        let omega_abs = x.sqrt() * (p.gamma_a * p.gamma_a + detuning * detuning).sqrt();
        let b0 = p.chi * x * c.eps3 / Complex64::new(c.eps2, -c.eps1);
        points.push(CurvePoint {
            x,
            omega_abs,
            branch_id: 0,
            z0: c.z0_fixed,
            defect: (c.z0_fixed - inversion_for(p, b0.norm_sqr())).abs(),
            photon_number: x,
            b0,
        });
    }
    label_segments(&mut points);
    Ok(BistabilityCurve { kind: CurveKind::Photon, points })
}

/// Right-hand side of the phonon relation for an arbitrary B₀:
/// `[γ_a² + (Δ_a − 2χ Re B₀)²] (ε₄ + iε₅) B₀ / (iχε₃)`. Its real part is
/// |Ω|²; its imaginary part vanishes only on the physical branch.
pub fn phonon_drive_squared(p: &SystemParams, c: &BistabilityCoefficients, b0: Complex64) -> Complex64 {
    let detuning = p.delta_a - 2.0 * p.chi * b0.re;
    let bracket = p.gamma_a * p.gamma_a + detuning * detuning;
    bracket * Complex64::new(c.eps4, c.eps5) * b0 / Complex64::new(0.0, p.chi * c.eps3)
}

/// |Ω| against |B₀|², sampled along the physical branch parameterized by
/// the photon numbers in `x_grid`.
pub fn phonon_bistability_curve(
    p: &SystemParams,
    x_grid: &[f64],
    mode: InversionMode,
) -> Result<BistabilityCurve, BistabilityError> {
    phonon_bistability_curve_with(p, x_grid, mode, ScaleReading::default(), &SolverOptions::default())
}

pub fn phonon_bistability_curve_with(
    p: &SystemParams,
    x_grid: &[f64],
    mode: InversionMode,
    reading: ScaleReading,
    opts: &SolverOptions,
) -> Result<BistabilityCurve, BistabilityError> {
    p.validate().map_err(SteadyStateError::from)?;
    validate_grid(x_grid)?;
    validate_mode(mode)?;
    let mut points = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let c = coefficients_at(p, x, mode, reading, opts)?;
        let b0 = c.phonon_amplitude(p.chi, x);
        let rhs = phonon_drive_squared(p, &c, b0);
        let defect = if rhs.norm() > 0.0 { rhs.im.abs() / rhs.norm() } else { 0.0 };
        if defect > PHONON_DEFECT_TOL {
            return Err(BistabilityError::OffBranch { x, defect });
        }
        points.push(CurvePoint {
            x: b0.norm_sqr(),
            omega_abs: rhs.re.max(0.0).sqrt(),
            branch_id: 0,
            z0: c.z0_fixed,
            defect,
            photon_number: x,
            b0,
        });
    }
    label_segments(&mut points);
    Ok(BistabilityCurve { kind: CurveKind::Phonon, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{linspace, load_params, presets, ParamsConfig};
    use crate::steady::solve_steady_states;

    fn fig2(drive_mhz: f64) -> SystemParams {
        load_params(&ParamsConfig { drive_hz: Some(drive_mhz * 1e6), ..presets::photon_bistability() })
            .unwrap()
    }

    fn fig3(drive_mhz: f64) -> SystemParams {
        load_params(&ParamsConfig { drive_hz: Some(drive_mhz * 1e6), ..presets::phonon_bistability() })
            .unwrap()
    }

    #[test]
    fn zero_photons_need_zero_drive() {
        let p = fig2(0.0);
        let c = photon_bistability_curve(&p, &[0.0, 1.0], InversionMode::Fixed(-0.99)).unwrap();
        assert_eq!(c.points[0].omega_abs, 0.0);
        let c = phonon_bistability_curve(&p, &[0.0, 1.0], InversionMode::SelfConsistent).unwrap();
        assert_eq!(c.points[0].omega_abs, 0.0);
        assert_eq!(c.points[0].x, 0.0);
    }

    #[test]
    fn fixed_inversion_curve_is_s_shaped() {
        let p = fig2(0.0);
        let grid = linspace(0.0, 40.0, 4001);
        let c = photon_bistability_curve(&p, &grid, InversionMode::Fixed(-0.99)).unwrap();
        assert!(!c.is_monotone());
        assert_eq!(c.segment_count(), 3);
        let (lo, hi) = c.multivalued_window().unwrap();
        assert!(lo < hi);
        assert!(c.points.iter().all(|pt| pt.omega_abs >= 0.0));
    }

    #[test]
    fn without_optomechanics_the_curve_is_linear_response() {
        let mut p = fig2(0.0);
        p.chi = 0.0;
        let grid = linspace(0.0, 40.0, 401);
        let c = photon_bistability_curve(&p, &grid, InversionMode::SelfConsistent).unwrap();
        assert!(c.is_monotone());
        let scale = (p.gamma_a * p.gamma_a + p.delta_a * p.delta_a).sqrt();
        for pt in &c.points {
            assert!((pt.omega_abs - pt.x.sqrt() * scale).abs() <= 1e-12 * scale * pt.x.sqrt().max(1.0));
        }
    }

    #[test]
    fn phonon_curve_is_s_shaped() {
        let p = fig3(0.0);
        let grid = linspace(0.0, 20.0, 2001);
        let c = phonon_bistability_curve(&p, &grid, InversionMode::Fixed(-0.99)).unwrap();
        assert!(!c.is_monotone());
        assert!(c.points.windows(2).all(|w| w[1].x > w[0].x));
        assert!(c.points.iter().all(|pt| pt.defect < 1e-12));
    }

    #[test]
    fn phonon_relation_reproduces_solved_drive() {
        for drive in [10.0, 15.0, 20.0, 30.0] {
            let p = fig3(drive);
            for s in solve_steady_states(&p).unwrap() {
                let c = BistabilityCoefficients::new(&p, s.z0, ScaleReading::QubitDamping);
                let rhs = phonon_drive_squared(&p, &c, s.b0);
                assert!((rhs.re - p.drive.norm_sqr()).abs() / p.drive.norm_sqr() < 1e-8);
                assert!(rhs.im.abs() / rhs.norm() < 1e-8);
            }
        }
    }

    #[test]
    fn off_branch_samples_show_a_defect() {
        let p = fig3(20.0);
        let c = BistabilityCoefficients::new(&p, -1.0, ScaleReading::QubitDamping);
        let rhs = phonon_drive_squared(&p, &c, Complex64::new(0.1, 0.1));
        assert!(rhs.im.abs() / rhs.norm() > PHONON_DEFECT_TOL);
    }

    #[test]
    fn coefficient_readings_differ_only_through_damping() {
        let p = fig2(0.0);
        let q = BistabilityCoefficients::new(&p, -1.0, ScaleReading::QubitDamping);
        let a = BistabilityCoefficients::new(&p, -1.0, ScaleReading::CavityDamping);
        assert!(q.eps3 > 0.0 && a.eps3 > 0.0);
        assert!((a.eps3 - q.eps3 - (p.gamma_a.powi(2) - p.gamma_q.powi(2))).abs() < 1e-6);
        assert_eq!(q.eps1, q.eps4);
        assert_eq!(q.eps2, q.eps5);
    }

    #[test]
    fn bad_inputs_rejected() {
        let p = fig2(0.0);
        assert_eq!(
            photon_bistability_curve(&p, &[1.0, 0.5], InversionMode::SelfConsistent),
            Err(BistabilityError::InvalidGrid)
        );
        assert_eq!(
            photon_bistability_curve(&p, &[-1.0, 0.5], InversionMode::SelfConsistent),
            Err(BistabilityError::InvalidGrid)
        );
        assert_eq!(
            photon_bistability_curve(&p, &[0.0, 0.5], InversionMode::Fixed(0.5)),
            Err(BistabilityError::InvalidInversion(0.5))
        );
    }
}
