// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: configuration files, figure presets and the
//! artifact writers behind the `qdemon` binary.

mod commands;
mod config;
mod presets;

pub use commands::{
    cmd_calibrate, cmd_simulate, cmd_tomography, read_grid_file, run_preset, AlphaRow, CalibrationReport, EntropyReportRow,
    Header, Overrides, StarkRow,
};
pub use config::{
    Artifact, CalibrationSettings, ExperimentConfig, GridKind, OneOrMany, PrepSpec, PrepTag, SweepSpec, TomographySettings,
    FAST_N_TRUNC, FAST_OUTPUT_STEP,
};
pub use presets::{preset, presets, Preset, PresetTask};

use crate::error::Error;

/// Version string written into every output header.
pub const VERSION: &str = concat!("qdemon ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Physics(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    /// 2 for configuration problems, 3 for everything raised while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(Error::Config(_)) => 2,
            CliError::Physics(_) | CliError::Output { .. } => 3,
        }
    }
}
