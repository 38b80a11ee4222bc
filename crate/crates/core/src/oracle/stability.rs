//! Linear stability of a steady state from the real 7×7 Jacobian.

use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MeanFieldState;
use crate::params::SystemParams;
use crate::steady::SteadyState;

pub type Jacobian = SMatrix<f64, 7, 7>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    /// Eigenvalues sorted by decreasing real part.
    pub eigenvalues: Vec<Complex64>,
    pub stable: bool,
    /// Largest real part.
    pub abscissa: f64,
    /// Smallest decay rate −Re λ; only meaningful when `stable`.
    pub slowest_decay: f64,
}

/// ∂f/∂y in the ordering `[re a, im a, re b, im b, re s, im s, z]`.
pub fn jacobian(p: &SystemParams, y: &MeanFieldState) -> Jacobian {
    let (ar, ai) = (y.a.re, y.a.im);
    let (br, bi) = (y.b.re, y.b.im);
    let (sr, si) = (y.s.re, y.s.im);
    let (chi, g, z) = (p.chi, p.g, y.z);
    let hq = 0.5 * p.gamma_q;
    #[rustfmt::skip]
    let rows = [
        -p.gamma_a, p.delta_a - 2.0 * chi * br, -2.0 * chi * ai, 0.0, 0.0, 0.0, 0.0,
        -p.delta_a + 2.0 * chi * br, -p.gamma_a, 2.0 * chi * ar, 0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, -p.gamma_b, p.omega_b, 0.0, g, 0.0,
        2.0 * chi * ar, 2.0 * chi * ai, -p.omega_b, -p.gamma_b, -g, 0.0, 0.0,
        0.0, 0.0, 0.0, -g * z, -hq, p.omega_q, -g * bi,
        0.0, 0.0, g * z, 0.0, -p.omega_q, -hq, g * br,
        0.0, 0.0, -4.0 * g * si, 4.0 * g * sr, 4.0 * g * bi, -4.0 * g * br, -p.gamma_q,
    ];
    Jacobian::from_row_slice(&rows)
}

pub fn classify_stability(p: &SystemParams, steady: &SteadyState) -> Stability {
    let jac = jacobian(p, &MeanFieldState::from_steady(steady));
    let mut eigenvalues: Vec<Complex64> = jac.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    let abscissa = eigenvalues[0].re;
    Stability { stable: abscissa < 0.0, abscissa, slowest_decay: -abscissa, eigenvalues }
}
