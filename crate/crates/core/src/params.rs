//! Physical parameter set of the hybrid cavity / mechanics / qubit system.
//!
//! Every rate and frequency is stored in one canonical angular unit,
//! rad/µs. Configuration documents quote ordinary frequencies in Hz
//! (f = ω/2π); [`load_params`] performs the 2π conversion exactly once.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Multiplier taking an ordinary frequency in Hz to rad/µs.
pub const HZ_TO_CANONICAL: f64 = TAU * 1e-6;

/// Probe/drive amplitude ratio above which the first-order probe
/// expansion is no longer trusted.
pub const LINEAR_RESPONSE_RATIO: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{field}` is not a finite number ({value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("damping `{field}` must be positive, got {value}")]
    NonPositiveDamping { field: &'static str, value: f64 },
    #[error("frequency `{field}` must be positive, got {value}")]
    NonPositiveFrequency { field: &'static str, value: f64 },
    #[error("detuning grid: {0}")]
    Grid(String),
    #[error("could not parse parameter document: {0}")]
    Parse(String),
}

/// All physical inputs of the driven hybrid system, in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mechanical mode frequency.
    pub omega_b: f64,
    /// Qubit transition frequency.
    pub omega_q: f64,
    /// Cavity–drive detuning ω_a − ω_d.
    pub delta_a: f64,
    /// Radiation-pressure coupling.
    pub chi: f64,
    /// Jaynes-Cummings qubit–phonon coupling.
    pub g: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_q: f64,
    /// Rabi amplitude of the strong drive.
    pub drive: Complex64,
    /// Rabi amplitude of the weak probe.
    pub probe: Complex64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let scalars = [
            ("omega_b", self.omega_b),
            ("omega_q", self.omega_q),
            ("delta_a", self.delta_a),
            ("chi", self.chi),
            ("g", self.g),
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("gamma_q", self.gamma_q),
            ("drive.re", self.drive.re),
            ("drive.im", self.drive.im),
            ("probe.re", self.probe.re),
            ("probe.im", self.probe.im),
        ];
        for (field, value) in scalars {
            if !value.is_finite() {
                return Err(ParamsError::NonFinite { field, value });
            }
        }
        for (field, value) in [
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("gamma_q", self.gamma_q),
        ] {
            if value <= 0.0 {
                return Err(ParamsError::NonPositiveDamping { field, value });
            }
        }
        for (field, value) in [("omega_b", self.omega_b), ("omega_q", self.omega_q)] {
            if value <= 0.0 {
                return Err(ParamsError::NonPositiveFrequency { field, value });
            }
        }
        Ok(())
    }

    /// True when |probe| ≤ 10⁻²·|drive|, the regime where first-order
    /// sideband amplitudes are meaningful.
    pub fn is_linear_response(&self) -> bool {
        self.probe.norm() <= LINEAR_RESPONSE_RATIO * self.drive.norm()
    }

    /// Every rate and amplitude multiplied by `k`. Dimensionless outputs
    /// are invariant under this map.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            omega_b: self.omega_b * k,
            omega_q: self.omega_q * k,
            delta_a: self.delta_a * k,
            chi: self.chi * k,
            g: self.g * k,
            gamma_a: self.gamma_a * k,
            gamma_b: self.gamma_b * k,
            gamma_q: self.gamma_q * k,
            drive: self.drive * k,
            probe: self.probe * k,
        }
    }

    pub fn with_drive(mut self, drive: Complex64) -> Self {
        self.drive = drive;
        self
    }

    pub fn with_probe(mut self, probe: Complex64) -> Self {
        self.probe = probe;
        self
    }
}

/// Parameter document in ordinary frequency units (Hz).
///
/// This is the on-disk form: a flat key-value document (TOML) or the
/// equivalent JSON object. Phases are in degrees and default to zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_b_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_q_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_a_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_a_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_b_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_q_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_phase_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_phase_deg: Option<f64>,
}

/// Names of the frequency-valued keys of [`ParamsConfig`], in document order.
pub const FREQUENCY_KEYS: [&str; 10] = [
    "omega_b_hz",
    "omega_q_hz",
    "delta_a_hz",
    "chi_hz",
    "g_hz",
    "gamma_a_hz",
    "gamma_b_hz",
    "gamma_q_hz",
    "drive_hz",
    "probe_hz",
];

impl ParamsConfig {
    /// Parses the flat key-value (TOML) form.
    pub fn from_toml_str(text: &str) -> Result<Self, ParamsError> {
        toml::from_str(text).map_err(|e| ParamsError::Parse(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self, ParamsError> {
        serde_json::from_str(text).map_err(|e| ParamsError::Parse(e.to_string()))
    }

    /// Picks the parser from the file extension (`.json` or anything else
    /// as flat key-value).
    pub fn from_path(path: &std::path::Path) -> Result<Self, ParamsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParamsError::Parse(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat f64 document always serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("flat f64 document always serializes")
    }

    /// Reads a key by name. Returns `None` for unknown keys.
    pub fn get(&self, key: &str) -> Option<Option<f64>> {
        Some(match key {
            "omega_b_hz" => self.omega_b_hz,
            "omega_q_hz" => self.omega_q_hz,
            "delta_a_hz" => self.delta_a_hz,
            "chi_hz" => self.chi_hz,
            "g_hz" => self.g_hz,
            "gamma_a_hz" => self.gamma_a_hz,
            "gamma_b_hz" => self.gamma_b_hz,
            "gamma_q_hz" => self.gamma_q_hz,
            "drive_hz" => self.drive_hz,
            "drive_phase_deg" => self.drive_phase_deg,
            "probe_hz" => self.probe_hz,
            "probe_phase_deg" => self.probe_phase_deg,
            _ => return None,
        })
    }

    /// Sets a key by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ParamsError> {
        let slot = match key {
            "omega_b_hz" => &mut self.omega_b_hz,
            "omega_q_hz" => &mut self.omega_q_hz,
            "delta_a_hz" => &mut self.delta_a_hz,
            "chi_hz" => &mut self.chi_hz,
            "g_hz" => &mut self.g_hz,
            "gamma_a_hz" => &mut self.gamma_a_hz,
            "gamma_b_hz" => &mut self.gamma_b_hz,
            "gamma_q_hz" => &mut self.gamma_q_hz,
            "drive_hz" => &mut self.drive_hz,
            "drive_phase_deg" => &mut self.drive_phase_deg,
            "probe_hz" => &mut self.probe_hz,
            "probe_phase_deg" => &mut self.probe_phase_deg,
            other => return Err(ParamsError::UnknownField(other.to_string())),
        };
        *slot = Some(value);
        Ok(())
    }

    /// Builds a document from an untyped key-value map.
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self, ParamsError> {
        let mut config = Self::default();
        for (key, value) in map {
            config.set(key, *value)?;
        }
        Ok(config)
    }
}

fn required(value: Option<f64>, field: &'static str) -> Result<f64, ParamsError> {
    let v = value.ok_or(ParamsError::MissingField(field))?;
    if !v.is_finite() {
        return Err(ParamsError::NonFinite { field, value: v });
    }
    Ok(v)
}

fn phasor(magnitude_hz: f64, phase_deg: f64) -> Complex64 {
    Complex64::from_polar(magnitude_hz * HZ_TO_CANONICAL, phase_deg.to_radians())
}

/// Converts a Hz-valued document into canonical [`SystemParams`] and
/// checks the invariants. A probe stronger than 10⁻² of the drive is
/// logged as a warning, not rejected.
pub fn load_params(config: &ParamsConfig) -> Result<SystemParams, ParamsError> {
    let omega_b = required(config.omega_b_hz, "omega_b_hz")?;
    let omega_q = required(config.omega_q_hz, "omega_q_hz")?;
    let delta_a = required(config.delta_a_hz, "delta_a_hz")?;
    let chi = required(config.chi_hz, "chi_hz")?;
    let g = required(config.g_hz, "g_hz")?;
    let gamma_a = required(config.gamma_a_hz, "gamma_a_hz")?;
    let gamma_b = required(config.gamma_b_hz, "gamma_b_hz")?;
    let gamma_q = required(config.gamma_q_hz, "gamma_q_hz")?;
    let drive = required(config.drive_hz, "drive_hz")?;
    let probe = required(config.probe_hz, "probe_hz")?;
    let drive_phase = config.drive_phase_deg.unwrap_or(0.0);
    let probe_phase = config.probe_phase_deg.unwrap_or(0.0);
    if !drive_phase.is_finite() {
        return Err(ParamsError::NonFinite { field: "drive_phase_deg", value: drive_phase });
    }
    if !probe_phase.is_finite() {
        return Err(ParamsError::NonFinite { field: "probe_phase_deg", value: probe_phase });
    }

    let params = SystemParams {
        omega_b: omega_b * HZ_TO_CANONICAL,
        omega_q: omega_q * HZ_TO_CANONICAL,
        delta_a: delta_a * HZ_TO_CANONICAL,
        chi: chi * HZ_TO_CANONICAL,
        g: g * HZ_TO_CANONICAL,
        gamma_a: gamma_a * HZ_TO_CANONICAL,
        gamma_b: gamma_b * HZ_TO_CANONICAL,
        gamma_q: gamma_q * HZ_TO_CANONICAL,
        drive: phasor(drive, drive_phase),
        probe: phasor(probe, probe_phase),
    };
    params.validate()?;
    if !params.is_linear_response() {
        log::warn!(
            "probe/drive ratio {:.3e} exceeds {LINEAR_RESPONSE_RATIO:e}: outside the linear-response regime",
            params.probe.norm() / params.drive.norm()
        );
    }
    Ok(params)
}

/// Ordered, finite, strictly increasing probe–drive detunings Δ (rad/µs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DetuningGrid(Vec<f64>);

impl DetuningGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, ParamsError> {
        if values.is_empty() {
            return Err(ParamsError::Grid("empty grid".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ParamsError::Grid(format!("non-finite value {v}")));
        }
        if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
            return Err(ParamsError::Grid(format!(
                "not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self(values))
    }

    /// `n` evenly spaced points from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self, ParamsError> {
        Self::new(linspace(lo, hi, n))
    }

    /// Evenly spaced grid given in units of the mechanical frequency.
    pub fn in_units_of(omega: f64, lo: f64, hi: f64, n: usize) -> Result<Self, ParamsError> {
        Self::new(linspace(lo, hi, n).into_iter().map(|x| x * omega).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for DetuningGrid {
    type Error = ParamsError;
    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<DetuningGrid> for Vec<f64> {
    fn from(grid: DetuningGrid) -> Self {
        grid.0
    }
}

/// Inclusive evenly spaced samples; the last point is exactly `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Reference parameter sets used by the figure presets, in Hz.
pub mod presets {
    use super::ParamsConfig;

    /// Bistability set: Δ_a/2π = 50 MHz, |Ω| left at 0 for the caller to sweep.
    pub fn photon_bistability() -> ParamsConfig {
        ParamsConfig {
            omega_b_hz: Some(100e6),
            omega_q_hz: Some(100e6),
            delta_a_hz: Some(50e6),
            chi_hz: Some(10e6),
            g_hz: Some(10e6),
            gamma_a_hz: Some(4e6),
            gamma_b_hz: Some(1000.0),
            gamma_q_hz: Some(0.1e6),
            drive_hz: Some(0.0),
            drive_phase_deg: None,
            probe_hz: Some(0.0),
            probe_phase_deg: None,
        }
    }

    /// Phonon bistability set: as [`photon_bistability`] with Δ_a/2π = 20 MHz.
    pub fn phonon_bistability() -> ParamsConfig {
        ParamsConfig {
            delta_a_hz: Some(20e6),
            ..photon_bistability()
        }
    }

    /// Spectrum set: Δ_a/2π = ω_b/2π = 100 MHz, |Ω|/2π = 19.8 MHz,
    /// probe 10⁻⁶ of the drive.
    pub fn spectrum() -> ParamsConfig {
        ParamsConfig {
            delta_a_hz: Some(100e6),
            drive_hz: Some(19.8e6),
            probe_hz: Some(19.8),
            ..photon_bistability()
        }
    }
}
