//! Projection of a sampled steady oscillation onto e^{0}, e^{−iΔt}, e^{+iΔt}.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{OracleError, Trajectory, MIN_PERIODS};

/// Static part and the two first-order sideband coefficients of one
/// variable: x(t) ≈ dc + minus·e^{−iΔt} + plus·e^{+iΔt}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidebands {
    pub dc: Complex64,
    pub minus: Complex64,
    pub plus: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonics {
    pub delta: f64,
    pub a: Sidebands,
    pub b: Sidebands,
    pub s: Sidebands,
    pub z: Sidebands,
    /// Mean power of the cavity signal left after removing the three
    /// lines, relative to the power in the A₋ line.
    pub leakage: f64,
}

/// Trapezoidal (equivalently rectangular, for periodic data) projection
/// over a window of exactly `n_periods` probe periods.
pub fn extract_harmonics(traj: &Trajectory, delta: f64, n_periods: usize) -> Result<Harmonics, OracleError> {
    if n_periods < MIN_PERIODS {
        return Err(OracleError::TooFewPeriods { periods: n_periods as f64, min: MIN_PERIODS });
    }
    let n = traj.deviations.len();
    let span = n as f64 * traj.sampling.interval;
    let periods = span * delta / TAU;
    if n == 0 || (periods - n_periods as f64).abs() > 1e-9 * n_periods as f64 {
        return Err(OracleError::WindowMisaligned { periods });
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut sums = [[zero; 3]; 4];
    let phases: Vec<Complex64> = traj.times.iter().map(|&t| Complex64::from_polar(1.0, delta * t)).collect();
    for (u, e) in traj.deviations.iter().zip(&phases) {
        let vals = channels(u);
        for (k, v) in vals.iter().enumerate() {
            sums[k][0] += v;
            sums[k][1] += v * e;
            sums[k][2] += v * e.conj();
        }
    }
    let inv = 1.0 / n as f64;
    let r = traj.reference;
    let origin = [r.a, r.b, r.s, Complex64::new(r.z, 0.0)];
    let lines: Vec<Sidebands> = (0..4)
        .map(|k| Sidebands { dc: origin[k] + sums[k][0] * inv, minus: sums[k][1] * inv, plus: sums[k][2] * inv })
        .collect();

    let a = lines[0];
    let dc_dev = sums[0][0] * inv;
    let mut rest = 0.0;
    for (u, e) in traj.deviations.iter().zip(&phases) {
        let fit = dc_dev + a.minus * e.conj() + a.plus * e;
        rest += (Complex64::new(u[0], u[1]) - fit).norm_sqr();
    }
    let signal = a.minus.norm_sqr();
    let leakage = if signal > 0.0 { rest * inv / signal } else { 0.0 };

    Ok(Harmonics { delta, a, b: lines[1], s: lines[2], z: lines[3], leakage })
}

fn channels(u: &[f64; 7]) -> [Complex64; 4] {
    [
        Complex64::new(u[0], u[1]),
        Complex64::new(u[2], u[3]),
        Complex64::new(u[4], u[5]),
        Complex64::new(u[6], 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{integrator::Stats, MeanFieldState, Sampling};

    fn synthetic(delta: f64, periods: usize, m: usize, dc: Complex64, minus: Complex64, plus: Complex64) -> Trajectory {
        let interval = TAU / delta / m as f64;
        let sampling = Sampling { start: 3.0, interval, count: periods * m };
        let times: Vec<f64> = (0..sampling.count).map(|j| sampling.time(j)).collect();
        let deviations = times
            .iter()
            .map(|&t| {
                let e = Complex64::from_polar(1.0, delta * t);
                let a = dc + minus * e.conj() + plus * e;
                [a.re, a.im, 0.0, 0.0, 0.0, 0.0, (minus * e.conj()).re]
            })
            .collect();
        Trajectory {
            reference: MeanFieldState::ground(),
            sampling,
            times,
            deviations,
            final_state: MeanFieldState::ground(),
            stats: Stats::default(),
        }
    }

    #[test]
    fn recovers_known_lines() {
        let (dc, minus, plus) = (Complex64::new(0.2, -0.1), Complex64::new(1e-3, 2e-3), Complex64::new(-3e-6, 1e-7));
        let traj = synthetic(62.8, 50, 64, dc, minus, plus);
        let h = extract_harmonics(&traj, 62.8, 50).unwrap();
        assert!((h.a.dc - dc).norm() < 1e-14);
        assert!((h.a.minus - minus).norm() < 1e-14);
        assert!((h.a.plus - plus).norm() < 1e-14);
        assert!(h.leakage < 1e-10);
        // A real signal has conjugate sidebands.
        assert!((h.z.plus - h.z.minus.conj()).norm() < 1e-15);
        assert!((h.z.dc.re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_short_and_misaligned_windows() {
        let traj = synthetic(10.0, 40, 32, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        assert!(matches!(extract_harmonics(&traj, 10.0, 40), Err(OracleError::TooFewPeriods { .. })));
        let traj = synthetic(10.0, 60, 32, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        assert!(matches!(extract_harmonics(&traj, 10.3, 60), Err(OracleError::WindowMisaligned { .. })));
        assert!(matches!(extract_harmonics(&traj, 10.0, 50), Err(OracleError::WindowMisaligned { .. })));
    }

    #[test]
    fn second_harmonic_shows_up_as_leakage() {
        let mut traj =
            synthetic(5.0, 50, 64, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        for (u, &t) in traj.deviations.iter_mut().zip(&traj.times) {
            u[0] += 0.1 * (10.0 * t).cos();
        }
        let h = extract_harmonics(&traj, 5.0, 50).unwrap();
        assert!((h.a.minus - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((h.leakage - 0.005).abs() < 1e-12);
    }
}
