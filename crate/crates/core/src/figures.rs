//! Ready-made datasets for the standard figure set: one CSV per curve
//! and a JSON manifest with the exact inputs and derived summaries.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Value};

use crate::bistability::{phonon_bistability_curve, photon_bistability_curve, BistabilityCurve};
use crate::export::{counts_csv, curve_csv, spectrum_csv};
use crate::oracle::classify_stability;
use crate::params::{linspace, load_params, presets, DetuningGrid, ParamsConfig, HZ_TO_CANONICAL};
use crate::spectra::{select_branch, spectrum_on_branch, window_analysis, SpectrumPoint};
use crate::steady::{count_real_solutions, solve_steady_states, InversionMode};
use crate::Error;

/// Fixed inversion used by the bistability figures.
pub const FIXED_INVERSION: f64 = -0.99;

/// Detuning window of the single- versus two-window spectra, in ω_b.
pub const SPECTRUM_RANGE: (f64, f64, usize) = (0.8, 1.2, 2001);
/// Wider window for the qubit-detuning series; the second dressed window
/// of the 80 and 120 MHz cases sits near 0.76 and 1.24 ω_b.
pub const WIDE_RANGE: (f64, f64, usize) = (0.7, 1.3, 6001);

/// Qubit frequencies (Hz) of the five-panel series.
pub const QUBIT_SERIES_HZ: [f64; 5] = [100e6, 80e6, 120e6, 10e6, 200e6];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
}

impl Figure {
    pub const ALL: [Figure; 7] =
        [Figure::Fig2, Figure::Fig3, Figure::Fig5, Figure::Fig6, Figure::Fig7, Figure::Fig8, Figure::Fig9];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig9 => "fig9",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub files: Vec<DataFile>,
    pub manifest: Value,
}

impl Dataset {
    pub fn manifest_name(&self) -> String {
        format!("{}_manifest.json", self.name)
    }

    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest is plain JSON");
        s.push('\n');
        s
    }

    /// Writes every CSV and the manifest into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, Error> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len() + 1);
        for f in &self.files {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.contents)?;
            written.push(path);
        }
        let path = dir.join(self.manifest_name());
        std::fs::write(&path, self.manifest_json())?;
        written.push(path);
        Ok(written)
    }
}

pub fn run_preset(figure: Figure) -> Result<Dataset, Error> {
    match figure {
        Figure::Fig2 => bistability_figure(figure, true),
        Figure::Fig3 => bistability_figure(figure, false),
        Figure::Fig5 => coupling_figure(figure, &["mu_p", "nu_p"]),
        Figure::Fig6 => coupling_figure(figure, &["G_s", "G_as"]),
        Figure::Fig7 => qubit_series_figure(figure, &QUBIT_SERIES_HZ, &["mu_p"]),
        Figure::Fig8 => qubit_series_figure(figure, &QUBIT_SERIES_HZ, &["nu_p"]),
        Figure::Fig9 => qubit_series_figure(figure, &QUBIT_SERIES_HZ[..3], &["G_s", "G_as"]),
    }
}

fn column_of(name: &str) -> usize {
    crate::export::SPECTRUM_HEADER.split(',').position(|c| c == name).expect("known spectrum column") + 1
}

fn gnuplot(files: &[(String, String)], x_col: usize, y_col: usize) -> String {
    let plots: Vec<String> = files
        .iter()
        .map(|(f, label)| format!("'{f}' every ::1 using {x_col}:{y_col} with lines title '{label}'"))
        .collect();
    format!("set datafile separator ','; plot {}", plots.join(", "))
}

fn spectrum_layout(curves: &[(String, String)], columns: &[&str]) -> Value {
    let x = column_of("delta_over_omega_b");
    let panels: Vec<Value> = columns
        .iter()
        .map(|c| {
            let y = column_of(c);
            json!({"xlabel": "Delta/omega_b", "ylabel": c, "x_column": x, "y_column": y, "gnuplot": gnuplot(curves, x, y)})
        })
        .collect();
    json!({ "panels": panels })
}

struct SpectrumCurve {
    file: DataFile,
    entry: Value,
    points: Vec<SpectrumPoint>,
}

fn spectrum_curve(
    file: String,
    label: String,
    config: &ParamsConfig,
    range: (f64, f64, usize),
) -> Result<SpectrumCurve, Error> {
    let p = load_params(config)?;
    let grid = DetuningGrid::in_units_of(p.omega_b, range.0, range.1, range.2)?;
    let (branch, steady) = select_branch(&p, None)?;
    let stability = classify_stability(&p, &steady);
    let points = spectrum_on_branch(&p, &steady, &grid)?;
    let windows = window_analysis(&points, p.gamma_a)?;
    let entry = json!({
        "file": file,
        "label": label,
        "params": config,
        "grid": {"axis": "delta_over_omega_b", "start": range.0, "stop": range.1, "count": range.2},
        "branch": branch,
        "steady_state": steady,
        "stable": stability.stable,
        "spectral_abscissa": stability.abscissa,
        "windows": windows,
    });
    let contents = spectrum_csv(&points, p.omega_b);
    Ok(SpectrumCurve { file: DataFile { name: file, contents }, entry, points })
}

fn coupling_figure(figure: Figure, columns: &[&str]) -> Result<Dataset, Error> {
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut legend = Vec::new();
    for g_mhz in [0.0, 10.0] {
        let config = ParamsConfig { g_hz: Some(g_mhz * 1e6), ..presets::spectrum() };
        let name = format!("{}_g{}MHz.csv", figure.name(), g_mhz);
        let label = format!("g/2pi = {g_mhz} MHz");
        let c = spectrum_curve(name.clone(), label.clone(), &config, SPECTRUM_RANGE)?;
        files.push(c.file);
        entries.push(c.entry);
        legend.push((name, label));
    }
    Ok(Dataset {
        name: figure.name().to_string(),
        files,
        manifest: json!({
            "preset": figure.name(),
            "curves": entries,
            "layout": spectrum_layout(&legend, columns),
        }),
    })
}

fn qubit_series_figure(figure: Figure, qubit_hz: &[f64], columns: &[&str]) -> Result<Dataset, Error> {
    let reference_config = ParamsConfig { g_hz: Some(0.0), ..presets::spectrum() };
    let reference = spectrum_curve(
        format!("{}_uncoupled.csv", figure.name()),
        "g/2pi = 0 Hz".into(),
        &reference_config,
        WIDE_RANGE,
    )?;
    let peak = reference.points.iter().map(|p| p.mu_p).fold(f64::MIN, f64::max);

    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut legend = Vec::new();
    let mut counts = Vec::new();
    for &wq in qubit_hz {
        let config = ParamsConfig { omega_q_hz: Some(wq), ..presets::spectrum() };
        let mhz = wq / 1e6;
        let name = format!("{}_wq{mhz}MHz.csv", figure.name());
        let label = format!("omega_q/2pi = {mhz} MHz");
        let mut c = spectrum_curve(name.clone(), label.clone(), &config, WIDE_RANGE)?;
        let deviation = c
            .points
            .iter()
            .zip(&reference.points)
            .map(|(a, b)| (a.mu_p - b.mu_p).abs())
            .fold(0.0, f64::max);
        c.entry["max_mu_p_deviation_from_uncoupled"] = json!(deviation / peak);
        counts.push(c.entry["windows"]["count"].clone());
        files.push(c.file);
        entries.push(c.entry);
        legend.push((name, label));
    }
    legend.push((reference.file.name.clone(), "g/2pi = 0 Hz".into()));
    files.push(reference.file);
    Ok(Dataset {
        name: figure.name().to_string(),
        files,
        manifest: json!({
            "preset": figure.name(),
            "curves": entries,
            "window_counts": counts,
            "uncoupled_reference": reference.entry,
            "layout": spectrum_layout(&legend, columns),
        }),
    })
}

fn curve_entry(file: &str, label: &str, mode: &str, curve: &BistabilityCurve) -> Value {
    let window = curve.multivalued_window();
    json!({
        "file": file,
        "label": label,
        "inversion": mode,
        "kind": curve.kind,
        "monotone": curve.is_monotone(),
        "segments": curve.segment_count(),
        "turning_points_omega_abs": curve.turning_points(),
        "multivalued_window_omega_abs": window,
        "multivalued_window_hz": window.map(|(lo, hi)| (lo / HZ_TO_CANONICAL, hi / HZ_TO_CANONICAL)),
        "max_defect": curve.points.iter().map(|p| p.defect).fold(0.0, f64::max),
    })
}

fn bistability_figure(figure: Figure, photon: bool) -> Result<Dataset, Error> {
    let (config, drive_max_hz, drive_step_hz) = if photon {
        (presets::photon_bistability(), 150e6, 1e6)
    } else {
        (presets::phonon_bistability(), 60e6, 0.5e6)
    };
    let p = load_params(&config)?;
    let x_max = (drive_max_hz / config.gamma_a_hz.expect("preset sets gamma_a")).powi(2);
    let x_grid = linspace(0.0, x_max, 2001);

    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (mode, tag) in [(InversionMode::Fixed(FIXED_INVERSION), "fixed"), (InversionMode::SelfConsistent, "self_consistent")] {
        let curve = if photon {
            photon_bistability_curve(&p, &x_grid, mode)?
        } else {
            phonon_bistability_curve(&p, &x_grid, mode)?
        };
        let name = format!("{}_{tag}.csv", figure.name());
        let label = match mode {
            InversionMode::Fixed(z) => format!("Z0 = {z}"),
            InversionMode::SelfConsistent => "self-consistent Z0".to_string(),
        };
        entries.push(curve_entry(&name, &label, tag, &curve));
        files.push(DataFile { name, contents: curve_csv(&curve) });
    }

    let n = (drive_max_hz / drive_step_hz).round() as usize;
    let omegas: Vec<f64> = (1..=n).map(|k| k as f64 * drive_step_hz * HZ_TO_CANONICAL).collect();
    let counts = count_real_solutions(&p, &omegas)?;
    let mut pattern = counts.clone();
    pattern.dedup();
    let counts_name = format!("{}_counts.csv", figure.name());
    files.push(DataFile { name: counts_name.clone(), contents: counts_csv(&omegas, &counts) });

    // Linear stability of every branch in the middle of the multivalued range.
    let multi: Vec<usize> = (0..counts.len()).filter(|&i| counts[i] > 1).collect();
    let stability = match multi.get(multi.len() / 2) {
        Some(&i) => {
            let q = p.with_drive(omegas[i].into());
            let branches = solve_steady_states(&q)?;
            let flags: Vec<Value> = branches
                .iter()
                .map(|b| {
                    let s = classify_stability(&q, b);
                    json!({"photon_number": b.photon_number(), "phonon_number": b.phonon_number(), "stable": s.stable, "spectral_abscissa": s.abscissa})
                })
                .collect();
            json!({"drive_hz": omegas[i] / HZ_TO_CANONICAL, "branches": flags})
        }
        None => Value::Null,
    };

    let (xlabel, curve_files): (&str, Vec<String>) =
        (if photon { "|A0|^2" } else { "|B0|^2" }, entries.iter().map(|e| e["file"].as_str().unwrap().to_string()).collect());
    let plot: Vec<String> =
        curve_files.iter().map(|f| format!("'{f}' every ::1 using ($2/(2*pi)):1 with lines title '{f}'")).collect();
    Ok(Dataset {
        name: figure.name().to_string(),
        files,
        manifest: json!({
            "preset": figure.name(),
            "params": config,
            "x_grid": {"start": 0.0, "stop": x_max, "count": x_grid.len()},
            "curves": entries,
            "counts": {"file": counts_name, "drive_hz_step": drive_step_hz, "pattern": pattern},
            "stability": stability,
            "layout": {
                "xlabel": "|Omega|/2pi (MHz)",
                "ylabel": xlabel,
                "note": "omega_abs is in rad/us, so |Omega|/2pi in MHz is omega_abs/(2 pi)",
                "gnuplot": format!("set datafile separator ','; plot {}", plot.join(", ")),
            },
        }),
    })
}
