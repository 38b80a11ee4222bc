//! Adaptive Dormand–Prince 5(4) integrator with Hairer's continuous
//! extension, used to sample trajectories on a uniform grid.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: u64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("integration stopped at t = {t}: {reason}")]
    Stopped { t: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Relative local error tolerance per step.
    pub rtol: f64,
    /// Absolute local error tolerance per step.
    pub atol: f64,
    /// Upper bound on the step size.
    pub h_max: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub max_steps: u64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-14, h_max: f64::INFINITY, h_init: None, max_steps: 500_000_000 }
    }
}

/// Uniform sample times `start + j·interval`, `j < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub start: f64,
    pub interval: f64,
    pub count: usize,
}

impl Sampling {
    pub fn time(&self, j: usize) -> f64 {
        self.start + j as f64 * self.interval
    }

    pub fn end(&self) -> f64 {
        if self.count == 0 {
            self.start
        } else {
            self.time(self.count - 1)
        }
    }

    pub fn none() -> Self {
        Self { start: 0.0, interval: 1.0, count: 0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: u64,
    pub rejected: u64,
    pub evaluations: u64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        let c = h * coef;
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &StepOptions) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t_end`.
///
/// `on_sample` receives every time of `sampling` inside [t0, t_end],
/// interpolated with the fourth-order continuous extension. `check` is
/// called after each accepted step and may abort the run by returning an
/// error message. Returns the state at `t_end`.
#[allow(clippy::too_many_arguments)]
pub fn integrate<const N: usize, F, S, C>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &StepOptions,
    sampling: &Sampling,
    mut on_sample: S,
    mut check: C,
) -> Result<([f64; N], Stats), IntegratorError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(usize, f64, &[f64; N]),
    C: FnMut(f64, &[f64; N]) -> Result<(), String>,
{
    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = y0;
    let mut next_sample = (0..sampling.count).find(|&j| sampling.time(j) >= t0).unwrap_or(sampling.count);
    let emit_until = |t_hi: f64, next: &mut usize, interp: &mut dyn FnMut(f64) -> [f64; N], sink: &mut S| {
        while *next < sampling.count {
            let ts = sampling.time(*next);
            if ts > t_hi {
                break;
            }
            let ys = interp(ts);
            sink(*next, ts, &ys);
            *next += 1;
        }
    };

    if next_sample < sampling.count && sampling.time(next_sample) <= t0 {
        let y_start = y;
        emit_until(t0, &mut next_sample, &mut |_| y_start, &mut on_sample);
    }
    if t_end <= t0 {
        return Ok((y, stats));
    }

    let mut k1 = f(t, &y);
    stats.evaluations += 1;

    let span = t_end - t0;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => {
            // Hairer's starting-step heuristic, first-order part.
            let d0 = error_norm(&y, &[0.0; N], &y, opts);
            let d1 = error_norm(&k1, &[0.0; N], &y, opts);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            h0.min(span)
        }
    }
    .min(opts.h_max)
    .max(f64::MIN_POSITIVE);

    let mut last_err: f64 = 1e-4;
    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(IntegratorError::TooManySteps { t, max_steps: opts.max_steps });
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(span) {
            return Err(IntegratorError::StepUnderflow { t, h });
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t + h, &y_new);
        stats.evaluations += 6;

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y_new, opts);
        if !e.is_finite() {
            return Err(IntegratorError::NonFinite { t });
        }

        if e <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };
            if next_sample < sampling.count && sampling.time(next_sample) <= t_new {
                let mut r1 = [0.0; N];
                let mut r2 = [0.0; N];
                let mut r3 = [0.0; N];
                let mut r4 = [0.0; N];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    r1[i] = dy;
                    r2[i] = bspl;
                    r3[i] = dy - h * k7[i] - bspl;
                    r4[i] = h
                        * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                let (y_old, t_old) = (y, t);
                let mut interp = |ts: f64| {
                    let th = (ts - t_old) / h;
                    let th1 = 1.0 - th;
                    let mut out = [0.0; N];
                    for i in 0..N {
                        out[i] = y_old[i] + th * (r1[i] + th1 * (r2[i] + th * (r3[i] + th1 * r4[i])));
                    }
                    out
                };
                emit_until(t_new, &mut next_sample, &mut interp, &mut on_sample);
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(IntegratorError::NonFinite { t });
            }
            check(t, &y).map_err(|reason| IntegratorError::Stopped { t, reason })?;
            // PI step-size control.
            let fac = 0.9 * e.max(1e-10).powf(-0.7 / 5.0) * last_err.powf(0.4 / 5.0);
            h = (h * fac.clamp(0.2, 5.0)).min(opts.h_max);
            last_err = e.max(1e-4);
        } else {
            stats.rejected += 1;
            let fac = 0.9 * e.powf(-1.0 / 5.0);
            h *= fac.clamp(0.2, 1.0);
        }
    }
    Ok((y, stats))
}
