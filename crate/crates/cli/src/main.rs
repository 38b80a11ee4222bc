//! `omit`: figure presets, spectra, bistability curves, sweeps and
//! time-domain checks from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use omit_core::bistability::{phonon_bistability_curve, photon_bistability_curve};
use omit_core::check::oracle_check;
use omit_core::export::{curve_csv, spectrum_csv};
use omit_core::figures::{run_preset, Figure};
use omit_core::oracle::{oracle_trajectory, OracleOptions};
use omit_core::params::{linspace, load_params, DetuningGrid, ParamsConfig, SystemParams};
use omit_core::spectra::{select_branch, spectrum_on_branch, window_analysis};
use omit_core::steady::InversionMode;
use omit_core::sweep::{run_sweep, SweepSpec};
use omit_core::{Error, EXIT_VALIDATION};

/// Environment variable holding the worker-thread count.
const WORKERS_ENV: &str = "OMIT_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "omit", version, about = "Optomechanical transparency with a qubit-coupled resonator")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Photon,
    Phonon,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Regenerate one figure dataset: fig2, fig3, fig5, fig6, fig7, fig8, fig9.
    Preset { name: String },
    /// Absorption, dispersion and Stokes/anti-Stokes spectra for a config.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Steady branch index; defaults to the unique stable branch.
        #[arg(long)]
        branch: Option<usize>,
        /// Detuning range in units of ω_b.
        #[arg(long, default_value_t = 0.8)]
        start: f64,
        #[arg(long, default_value_t = 1.2)]
        stop: f64,
        #[arg(long, default_value_t = 2001)]
        count: usize,
    },
    /// |Ω| against |A0|² (photon) or |B0|² (phonon).
    #[command(group(clap::ArgGroup::new("inversion").required(true)))]
    Bistability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Fixed qubit inversion Z0 in [-1, 0).
        #[arg(long, group = "inversion", allow_hyphen_values = true)]
        z0: Option<f64>,
        /// Solve Z0 self-consistently at every point.
        #[arg(long, group = "inversion")]
        self_consistent: bool,
        /// Largest photon number on the grid; defaults to (150 MHz/γ_a)².
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Evaluate a quantity over a one- or two-axis grid from a JSON spec.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Compare the first-order sidebands with direct time integration.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
        /// Probe strength relative to the drive.
        #[arg(long)]
        eps_ratio: f64,
        #[arg(long)]
        branch: Option<usize>,
        /// Detuning range in units of ω_b.
        #[arg(long, default_value_t = 0.9)]
        start: f64,
        #[arg(long, default_value_t = 1.1)]
        stop: f64,
        #[arg(long, default_value_t = 21)]
        count: usize,
        /// Also write the sampled trajectory of every run (large files).
        #[arg(long)]
        export_trajectories: bool,
    },
}

fn load(path: &Path) -> Result<(ParamsConfig, SystemParams), Error> {
    let config = ParamsConfig::from_path(path)?;
    let params = load_params(&config)?;
    Ok((config, params))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn detunings(p: &SystemParams, start: f64, stop: f64, count: usize) -> Result<Vec<f64>, Error> {
    Ok(DetuningGrid::in_units_of(p.omega_b, start, stop, count)?.values().to_vec())
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, Error> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Preset { name } => {
            let figure: Figure = name.parse()?;
            run_preset(figure)?.write_to(out)
        }
        Command::Spectrum { config, branch, start, stop, count } => {
            let (_, p) = load(config)?;
            let grid = DetuningGrid::in_units_of(p.omega_b, *start, *stop, *count)?;
            let (_, steady) = select_branch(&p, *branch)?;
            let points = spectrum_on_branch(&p, &steady, &grid)?;
            let mut written = vec![write(out, "spectrum.csv", &spectrum_csv(&points, p.omega_b))?];
            let windows = window_analysis(&points, p.gamma_a)?;
            written.push(write(out, "spectrum_windows.json", &(windows.to_json() + "\n"))?);
            Ok(written)
        }
        Command::Bistability { config, mode, z0, self_consistent: _, x_max, points } => {
            let (cfg, p) = load(config)?;
            let inversion = z0.map_or(InversionMode::SelfConsistent, InversionMode::Fixed);
            let gamma_a_hz = cfg.gamma_a_hz.unwrap_or(1.0);
            let x_max = x_max.unwrap_or((150e6 / gamma_a_hz).powi(2));
            let x_grid = linspace(0.0, x_max, *points);
            let (curve, name) = match mode {
                Mode::Photon => (photon_bistability_curve(&p, &x_grid, inversion)?, "bistability_photon.csv"),
                Mode::Phonon => (phonon_bistability_curve(&p, &x_grid, inversion)?, "bistability_phonon.csv"),
            };
            Ok(vec![write(out, name, &curve_csv(&curve))?])
        }
        Command::Sweep { spec } => {
            let text = std::fs::read_to_string(spec)?;
            let spec = SweepSpec::from_json_str(&text)?;
            let result = run_sweep(&spec)?;
            Ok(vec![write(out, "sweep.csv", &result.to_csv())?])
        }
        Command::OracleCheck { config, eps_ratio, branch, start, stop, count, export_trajectories } => {
            let (_, p) = load(config)?;
            let deltas = detunings(&p, *start, *stop, *count)?;
            let opts = OracleOptions::default();
            let report = oracle_check(&p, &deltas, *eps_ratio, *branch, &opts)?;
            let mut written = vec![write(out, "oracle_check.json", &(report.to_json() + "\n"))?];
            if *export_trajectories {
                let probed = p.with_probe(p.drive * *eps_ratio);
                let (_, steady) = select_branch(&probed, Some(report.branch))?;
                for (k, &delta) in deltas.iter().enumerate() {
                    let (_, _, traj) = oracle_trajectory(&probed, &steady, delta, &opts)?;
                    let mut buf = Vec::new();
                    traj.write_csv(&mut buf)?;
                    let text = String::from_utf8(buf).expect("CSV is ASCII");
                    written.push(write(out, &format!("trajectory_{k:03}.csv"), &text)?);
                }
            }
            log::info!("max relative error {:e} against threshold {:e}", report.max_error, report.threshold);
            println!(
                "{}: max relative error {:.3e}, threshold {:.3e}",
                if report.pass { "pass" } else { "fail" },
                report.max_error,
                report.threshold
            );
            Ok(written)
        }
    }
}

fn configure_workers() -> Result<(), String> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_workers() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_VALIDATION as u8);
    }
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
