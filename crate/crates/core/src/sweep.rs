//! One- and two-axis parameter sweeps over config keys and the probe
//! detuning.

use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::{fmt_f64, quote};
use crate::params::{linspace, load_params, ParamsConfig, SystemParams, HZ_TO_CANONICAL};
use crate::response::compute_response;
use crate::spectra::{select_branch, spectrum_point};
use crate::steady::{solve_steady_states, SteadyState};

/// Probe detuning axis in Hz.
pub const DELTA_HZ: &str = "delta_hz";
/// Probe detuning axis in units of ω_b.
pub const DELTA_OVER_OMEGA_B: &str = "delta_over_omega_b";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    Invalid(String),
    #[error("cannot parse sweep spec: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "mu_p")]
    MuP,
    #[serde(rename = "nu_p")]
    NuP,
    #[serde(rename = "G_s")]
    GS,
    #[serde(rename = "G_as")]
    GAs,
    #[serde(rename = "a0_sq", alias = "|A0|²", alias = "|A0|^2")]
    A0Sq,
    #[serde(rename = "b0_sq", alias = "|B0|²", alias = "|B0|^2")]
    B0Sq,
    #[serde(rename = "branch_count")]
    BranchCount,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::MuP => "mu_p",
            Quantity::NuP => "nu_p",
            Quantity::GS => "G_s",
            Quantity::GAs => "G_as",
            Quantity::A0Sq => "a0_sq",
            Quantity::B0Sq => "b0_sq",
            Quantity::BranchCount => "branch_count",
        }
    }

    pub fn is_spectral(self) -> bool {
        matches!(self, Quantity::MuP | Quantity::NuP | Quantity::GS | Quantity::GAs)
    }
}

/// A swept key with either explicit values or `start`, `stop`, `count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl Axis {
    pub fn values(field: &str, values: Vec<f64>) -> Self {
        Self { field: field.to_string(), values: Some(values), start: None, stop: None, count: None }
    }

    pub fn linspace(field: &str, start: f64, stop: f64, count: usize) -> Self {
        Self { field: field.to_string(), values: None, start: Some(start), stop: Some(stop), count: Some(count) }
    }

    pub fn is_delta(&self) -> bool {
        self.field == DELTA_HZ || self.field == DELTA_OVER_OMEGA_B
    }

    pub fn grid(&self) -> Result<Vec<f64>, SweepError> {
        let v = match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 || (n == 1 && a != b) {
                    return Err(SweepError::Invalid(format!("axis '{}': count must be ≥ 2 for a range", self.field)));
                }
                if n == 1 { vec![a] } else { linspace(a, b, n) }
            }
            _ => {
                return Err(SweepError::Invalid(format!(
                    "axis '{}': give either values or start/stop/count",
                    self.field
                )))
            }
        };
        if v.is_empty() {
            return Err(SweepError::Invalid(format!("axis '{}' is empty", self.field)));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SweepError::Invalid(format!("axis '{}' must be finite and strictly increasing", self.field)));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ParamsConfig,
    pub axis1: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis2: Option<Axis>,
    pub quantity: Quantity,
    /// Steady branch index; the unique stable branch when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<usize>,
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self, SweepError> {
        serde_json::from_str(text).map_err(|e| SweepError::Parse(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    fn axes(&self) -> Vec<&Axis> {
        std::iter::once(&self.axis1).chain(self.axis2.as_ref()).collect()
    }

    /// Checks names and grids; returns the two grids (the second is a
    /// single placeholder when there is no second axis).
    pub fn validate(&self) -> Result<(Vec<f64>, Vec<f64>), SweepError> {
        for axis in self.axes() {
            if !axis.is_delta() && ParamsConfig::default().get(&axis.field).is_none() {
                return Err(SweepError::Invalid(format!("unknown axis field '{}'", axis.field)));
            }
        }
        if let Some(a2) = &self.axis2 {
            if a2.field == self.axis1.field {
                return Err(SweepError::Invalid("both axes sweep the same field".into()));
            }
            if a2.is_delta() && self.axis1.is_delta() {
                return Err(SweepError::Invalid("only one detuning axis is allowed".into()));
            }
        }
        let has_delta = self.axes().iter().any(|a| a.is_delta());
        if self.quantity.is_spectral() && !has_delta {
            return Err(SweepError::Invalid(format!("quantity {} needs a detuning axis", self.quantity.name())));
        }
        let g1 = self.axis1.grid()?;
        let g2 = match &self.axis2 {
            Some(a) => a.grid()?,
            None => vec![f64::NAN],
        };
        let first = self.config_at(g1[0], g2[0])?;
        load_params(&first).map_err(|e| SweepError::Invalid(format!("base parameters: {e}")))?;
        Ok((g1, g2))
    }

    fn config_at(&self, v1: f64, v2: f64) -> Result<ParamsConfig, SweepError> {
        let mut c = self.base.clone();
        for (axis, v) in self.axes().into_iter().zip([v1, v2]) {
            if !axis.is_delta() {
                c.set(&axis.field, v).map_err(|e| SweepError::Invalid(e.to_string()))?;
            }
        }
        Ok(c)
    }

    fn delta_at(&self, p: &SystemParams, v1: f64, v2: f64) -> Option<f64> {
        self.axes().into_iter().zip([v1, v2]).find(|(a, _)| a.is_delta()).map(|(a, v)| {
            if a.field == DELTA_HZ {
                v * HZ_TO_CANONICAL
            } else {
                v * p.omega_b
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Columns: axis1 field, [axis2 field], quantity, error. Failed
    /// points have an empty value and the message in `error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.spec.axis1.field);
        if let Some(a2) = &self.spec.axis2 {
            out.push(',');
            out.push_str(&a2.field);
        }
        let _ = writeln!(out, ",{},error", self.spec.quantity.name());
        for r in &self.rows {
            out.push_str(&fmt_f64(r.axis1));
            if let Some(v) = r.axis2 {
                out.push(',');
                out.push_str(&fmt_f64(v));
            }
            out.push(',');
            if let Some(v) = r.value {
                out.push_str(&fmt_f64(v));
            }
            out.push(',');
            if let Some(e) = &r.error {
                out.push_str(&quote(e));
            }
            out.push('\n');
        }
        out
    }
}

enum Prepared {
    Count(usize),
    Branch(SteadyState),
}

fn prepare(spec: &SweepSpec, config: &ParamsConfig) -> Result<(SystemParams, Prepared), String> {
    let p = load_params(config).map_err(|e| e.to_string())?;
    let prepared = match spec.quantity {
        Quantity::BranchCount => Prepared::Count(solve_steady_states(&p).map_err(|e| e.to_string())?.len()),
        _ => Prepared::Branch(select_branch(&p, spec.branch).map_err(|e| e.to_string())?.1),
    };
    Ok((p, prepared))
}

fn evaluate(
    spec: &SweepSpec,
    group: &Result<(SystemParams, Prepared), String>,
    v1: f64,
    v2: f64,
) -> Result<f64, String> {
    let (p, prepared) = group.as_ref().map_err(Clone::clone)?;
    match (spec.quantity, prepared) {
        (Quantity::BranchCount, Prepared::Count(n)) => Ok(*n as f64),
        (Quantity::A0Sq, Prepared::Branch(s)) => Ok(s.photon_number()),
        (Quantity::B0Sq, Prepared::Branch(s)) => Ok(s.phonon_number()),
        (q, Prepared::Branch(s)) => {
            let delta = spec.delta_at(p, v1, v2).expect("validated: spectral sweeps have a detuning axis");
            let r = compute_response(p, s, delta).map_err(|e| e.to_string())?;
            let pt = spectrum_point(p, s, &r).map_err(|e| e.to_string())?;
            Ok(match q {
                Quantity::MuP => pt.mu_p,
                Quantity::NuP => pt.nu_p,
                Quantity::GS => pt.g_s,
                _ => pt.g_as,
            })
        }
        (_, Prepared::Count(_)) => unreachable!("counts are only prepared for branch_count"),
    }
}

/// Evaluates the spec on every grid point. Rows run axis1-major; points
/// are computed in parallel and failures are recorded, not raised. The
/// steady state is solved once per distinct non-detuning setting.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    let (g1, g2) = spec.validate()?;
    let (n1, n2) = (g1.len(), g2.len());
    let d1 = spec.axis1.is_delta();
    let d2 = spec.axis2.as_ref().is_some_and(Axis::is_delta);
    let group_of = |i: usize, j: usize| if d1 { j } else if d2 { i } else { i * n2 + j };
    let n_groups = if d1 { n2 } else if d2 { n1 } else { n1 * n2 };

    let groups: Vec<Result<(SystemParams, Prepared), String>> = (0..n_groups)
        .into_par_iter()
        .map(|k| {
            let (i, j) = if d1 { (0, k) } else if d2 { (k, 0) } else { (k / n2, k % n2) };
            let config = spec.config_at(g1[i], g2[j]).map_err(|e| e.to_string())?;
            prepare(spec, &config)
        })
        .collect();

    let rows = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n2, k % n2);
            let result = evaluate(spec, &groups[group_of(i, j)], g1[i], g2[j]);
            let (value, error) = match result {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e)),
            };
            SweepRow { axis1: g1[i], axis2: spec.axis2.as_ref().map(|_| g2[j]), value, error }
        })
        .collect();
    Ok(SweepResult { spec: spec.clone(), rows })
}
