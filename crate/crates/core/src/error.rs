// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the simulator and its analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("density matrix validation failed: {0}")]
    Validation(String),

    #[error("integrator accuracy lost at t = {t:.6e} s ({detail}); retry with a smaller tolerance")]
    IntegratorAccuracy { t: f64, detail: String },

    #[error("weak-drive assumption violated: |alpha| = {0:.3} exceeds 2")]
    WeakDriveViolated(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("pulse amplitudes are not calibrated; run the pi-pulse calibration first")]
    CalibrationRequired,

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("target temperature {target} K is below the equilibrium temperature {floor} K")]
    UnreachableTemperature { target: f64, floor: f64 },

    #[error("population {0} does not correspond to a positive temperature")]
    NegativeTemperature(f64),

    #[error("contrast ratio {0} must exceed 1")]
    InconsistentContrast(f64),

    #[error("Rabi frequency {omega} rad/s lies outside the gain model domain (omega_inf = {omega_inf})")]
    GainDomain { omega: f64, omega_inf: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("truncation unsafe: {0}")]
    TruncationUnsafe(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
