//! Steady states, bistability curves, probe response and transmission
//! spectra of a driven optomechanical cavity whose mechanical mode is
//! coupled to a two-level system.
//!
//! All frequencies and rates are angular, in rad/µs; time is in µs.
//! Configuration files carry ordinary frequencies in Hz.

pub mod bistability;
pub mod check;
pub mod export;
pub mod figures;
pub mod oracle;
pub mod params;
pub mod response;
pub mod spectra;
pub mod steady;
pub mod sweep;

use thiserror::Error;

use bistability::BistabilityError;
use check::CheckError;
use oracle::OracleError;
use params::ParamsError;
use response::ResponseError;
use spectra::SpectraError;
use steady::SteadyStateError;
use sweep::SweepError;

/// Exit status for invalid input (parameters, specs, files).
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Steady(#[from] SteadyStateError),
    #[error(transparent)]
    Bistability(#[from] BistabilityError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn steady_code(e: &SteadyStateError) -> i32 {
    match e {
        SteadyStateError::Params(_) => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

fn spectra_code(e: &SpectraError) -> i32 {
    match e {
        SpectraError::Steady(s) => steady_code(s),
        SpectraError::Response(_) | SpectraError::NoStableBranch { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

impl Error {
    /// 2 for anything the caller can fix by changing the input, 3 when
    /// the numerics fail on valid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Params(_) | Error::Sweep(_) | Error::UnknownPreset(_) | Error::Io(_) => EXIT_VALIDATION,
            Error::Steady(e) => steady_code(e),
            Error::Bistability(e) => match e {
                BistabilityError::Steady(s) => steady_code(s),
                BistabilityError::InvalidGrid | BistabilityError::InvalidInversion(_) => EXIT_VALIDATION,
                BistabilityError::OffBranch { .. } => EXIT_NUMERICAL,
            },
            Error::Response(_) => EXIT_NUMERICAL,
            Error::Spectra(e) => spectra_code(e),
            Error::Oracle(e) => match e {
                OracleError::Params(_)
                | OracleError::TooFewPeriods { .. }
                | OracleError::WindowMisaligned { .. }
                | OracleError::InvalidDetuning(_) => EXIT_VALIDATION,
                _ => EXIT_NUMERICAL,
            },
            Error::Check(e) => match e {
                CheckError::InvalidRatio(_) | CheckError::ZeroDrive | CheckError::NoDetunings => EXIT_VALIDATION,
                CheckError::Steady(s) => steady_code(s),
                CheckError::Spectra(s) => spectra_code(s),
                _ => EXIT_NUMERICAL,
            },
        }
    }
}
