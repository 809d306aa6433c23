// SPDX-License-Identifier: Apache-2.0

//! Subcommands and artifact writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::device::stark_dephasing_response;
use crate::error::Error;
use crate::experiment::{run_many, RunOptions, Scenario, ScenarioResult, ScenarioSummary};
use crate::operators::C64;
use crate::sequences::{alpha_to_nbar, calibrate_pi_amplitude, encoded_cavity_state_with, Calibration, PulseShape, SEQUENTIAL_SIGMA};
use crate::thermo::{binary_entropy, calibrate_gain, synthetic_amplitudes, with_multiplicative_noise, GainFit, GainModel};
use crate::tomography::{
    build_effects, entropy_sensitivity_sweep, maxlike_reconstruct, simulate_tomography, SensitivityTable, TomographyGrid,
    TomographyRecord,
};

use super::config::{Artifact, ExperimentConfig, SweepSpec};
use super::presets::{Preset, PresetTask};
use super::{CliError, VERSION};

/// Provenance block at the top of every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: String,
    pub config: ExperimentConfig,
}

#[derive(Serialize, Deserialize)]
struct Document<T> {
    header: Header,
    data: T,
}

/// Command-line flags that override config fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub fast: bool,
    pub seed: Option<u64>,
    pub fixed_step: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        cfg.fast_mode |= self.fast;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.fixed_step.is_some() {
            cfg.fixed_step = self.fixed_step;
        }
        cfg
    }
}

/// Makes fast-mode choices explicit so the header fully describes the run.
fn resolve(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut out = cfg.clone();
    out.device = cfg.effective_device();
    out.output_step = Some(cfg.effective_output_step());
    out
}

struct Writer {
    dir: PathBuf,
    header: Header,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path, cfg: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
        Ok(Writer { dir: dir.to_path_buf(), header: Header { version: VERSION.into(), config: cfg.clone() }, written: Vec::new() })
    }

    fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let config = serde_json::to_string(&self.header.config).expect("config serializes");
        let run = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(&path)?);
            writeln!(w, "# {}", self.header.version)?;
            writeln!(w, "# config {config}")?;
            body(&mut w)?;
            w.flush()
        };
        run().map_err(|e| output_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let doc = Document { header: self.header.clone(), data };
        let text = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
        fs::write(&path, text + "\n").map_err(|e| output_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

fn output_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Output { path: path.display().to_string(), source }
}

fn run_options(cfg: &ExperimentConfig) -> RunOptions {
    RunOptions { fixed_step: cfg.fixed_step, ..Default::default() }
}

fn calibration(cfg: &ExperimentConfig) -> Result<Calibration, CliError> {
    Ok(Calibration::calibrated(&cfg.device)?.with_displacement_per_alpha(cfg.calibration.displacement_per_alpha))
}

/// Scenarios in preparation-major order.
fn scenarios(cfg: &ExperimentConfig, alphas: &[f64]) -> Vec<Scenario> {
    let mut out = Vec::new();
    for prep in cfg.preparations() {
        for &alpha in alphas {
            let mut s = Scenario::new(cfg.sequence_kind, prep, alpha);
            if let Some(r) = cfg.reset_duration {
                s.reset_duration = r;
            }
            s.output_step = cfg.effective_output_step();
            out.push(s);
        }
    }
    out
}

fn file_stem(index: usize, r: &ScenarioResult) -> String {
    format!("{index:03}_{}_a{:.4}", r.scenario.prep.label(), r.scenario.alpha_in)
}

/// Runs the configured sweep and writes the requested artifacts. Returns
/// the written paths.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve(cfg);
    let params = &cfg.device;
    let mut w = Writer::new(out, &cfg)?;
    let needs_alpha = cfg.outputs.iter().any(|a| *a != Artifact::StarkTable);
    let (cal, alphas) = if needs_alpha {
        let cal = calibration(&cfg)?;
        let alphas = cfg.alpha_in.resolve(cfg.sequence_kind, params, &cal)?;
        (Some(cal), alphas)
    } else {
        (None, Vec::new())
    };
    if needs_alpha && (alphas.is_empty() || cfg.preparations().is_empty()) {
        log::warn!("empty sweep, nothing to simulate");
        return Ok(w.written);
    }

    if cfg.outputs.iter().any(|a| a.needs_scenarios()) {
        let cal = cal.as_ref().expect("calibrated above");
        let results = run_many(params, cal, &scenarios(&cfg, &alphas), &run_options(&cfg))?;
        write_scenario_artifacts(&mut w, &cfg, &results)?;
    }
    if cfg.outputs.contains(&Artifact::VacuumTable) {
        let cal = cal.as_ref().expect("calibrated above");
        let rows = alphas
            .iter()
            .map(|&a| Ok((a, encoded_cavity_state_with(a, VACUUM_DRIVE / 4.0, params, cal)?.population(0))))
            .collect::<crate::Result<Vec<_>>>()?;
        w.csv("vacuum_table.csv", |f| {
            writeln!(f, "alpha_in,p_vacuum")?;
            for (a, p) in &rows {
                writeln!(f, "{a:.6},{p:.12e}")?;
            }
            Ok(())
        })?;
    }
    if cfg.outputs.contains(&Artifact::StarkTable) {
        let rows = stark_table(&cfg)?;
        w.csv("stark_table.csv", |f| {
            writeln!(f, "delta_hz,f_stark_hz,gamma_d_per_s")?;
            for r in &rows {
                writeln!(f, "{:.6e},{:.12e},{:.12e}", r.delta_hz, r.f_stark_hz, r.gamma_d)?;
            }
            Ok(())
        })?;
    }
    Ok(w.written)
}

/// Length of the cavity drive used for the vacuum-population table, s.
const VACUUM_DRIVE: f64 = 100e-9;

fn write_scenario_artifacts(w: &mut Writer, cfg: &ExperimentConfig, results: &[ScenarioResult]) -> Result<(), CliError> {
    for (i, r) in results.iter().enumerate() {
        let stem = file_stem(i, r);
        if cfg.outputs.contains(&Artifact::Trajectory) {
            w.csv(&format!("trajectory_{stem}.csv"), |f| r.trajectory.write_csv(f))?;
        }
        if cfg.outputs.contains(&Artifact::Power) {
            w.csv(&format!("power_{stem}.csv"), |f| r.work.write_csv(f))?;
        }
    }
    if cfg.outputs.contains(&Artifact::Summary) {
        let rows: Vec<ScenarioSummary> = results.iter().map(ScenarioResult::summary).collect();
        w.json("summary.json", &rows)?;
    }
    if cfg.outputs.contains(&Artifact::WorkTable) {
        w.csv("work_table.csv", |f| {
            writeln!(f, "prep,alpha_in,nbar,sqrt_nbar,work_hfs")?;
            for r in results {
                let s = r.summary();
                writeln!(f, "{},{:.6},{:.12e},{:.12e},{:.12e}", s.prep, s.alpha_in, s.nbar, s.nbar.max(0.0).sqrt(), s.work_hfs)?;
            }
            Ok(())
        })?;
    }
    if cfg.outputs.contains(&Artifact::EnergyTable) {
        w.csv("energy_table.csv", |f| {
            writeln!(f, "prep,alpha_in,u_s_hfs")?;
            for r in results {
                writeln!(f, "{},{:.6},{:.12e}", r.scenario.prep.label(), r.scenario.alpha_in, r.final_pe)?;
            }
            Ok(())
        })?;
    }
    if cfg.outputs.contains(&Artifact::EntropyTable) {
        w.csv("entropy_table.csv", |f| {
            writeln!(f, "prep,alpha_in,s_s_reset,p_vacuum,binary_entropy_ref")?;
            for r in results {
                writeln!(
                    f,
                    "{},{:.6},{:.12e},{:.12e},{:.12e}",
                    r.scenario.prep.label(),
                    r.scenario.alpha_in,
                    r.entropies.s_s_reset,
                    r.encoded_vacuum,
                    binary_entropy(r.encoded_vacuum)
                )?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

/// One detuning of the weak-drive spectroscopy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkRow {
    pub delta_hz: f64,
    pub f_stark_hz: f64,
    pub gamma_d: f64,
}

/// Stationary response for detunings covering both dressed cavity lines,
/// with the drive giving |α| = 0.5 on resonance.
fn stark_table(cfg: &ExperimentConfig) -> Result<Vec<StarkRow>, CliError> {
    let params = &cfg.device;
    let kappa = params.kappa_rate();
    let eps = C64::new(0.25 * kappa, 0.0);
    let settle = [0.0, 20.0 / kappa];
    let chi_eff = params.chi - params.chi2;
    let (lo, hi) = (-chi_eff - 20e6, 20e6);
    let count = if cfg.fast_mode { 41 } else { 161 };
    (0..count)
        .map(|k| {
            let delta = lo + (hi - lo) * k as f64 / (count - 1) as f64;
            let r = stark_dephasing_response(params, delta, eps, &settle)?;
            Ok(StarkRow { delta_hz: delta, f_stark_hz: r.last_f_stark(), gamma_d: r.last_gamma_d() })
        })
        .collect()
}

/// Per-scenario entry of the tomography report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReportRow {
    pub prep: String,
    pub alpha_in: f64,
    /// Entropy of the simulated cavity state after step ③.
    pub s_d_direct: f64,
    pub s_d_reconstructed: f64,
    /// `S_S(①) − S_S(③)`.
    pub delta_s_s: f64,
    pub converged: bool,
    pub iterations: usize,
    pub rms_residual: f64,
    pub sensitivity: Vec<SensitivityTable>,
}

/// Simulates the demon runs, measures the cavity on the tomography grid and
/// reconstructs it.
pub fn cmd_tomography(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve(cfg);
    let params = &cfg.device;
    let mut w = Writer::new(out, &cfg)?;
    let cal = calibration(&cfg)?;
    let alphas = cfg.alpha_in.resolve(cfg.sequence_kind, params, &cal)?;
    let scenarios = scenarios(&cfg, &alphas);
    if scenarios.is_empty() {
        log::warn!("empty sweep, nothing to reconstruct");
        return Ok(w.written);
    }
    let grid = cfg.tomography.grid(cfg.fast_mode);
    let mut recon = cfg.tomography.reconstruction(cfg.fast_mode);
    if cfg.fixed_step.is_some() {
        recon.probe.adjoint.fixed_step = cfg.fixed_step;
    }
    if recon.n_trunc_recon > params.n_trunc {
        return Err(CliError::Config(format!(
            "n_trunc_recon {} exceeds the simulated truncation {}",
            recon.n_trunc_recon, params.n_trunc
        )));
    }
    let results = run_many(params, &cal, &scenarios, &run_options(&cfg))?;
    let effects = build_effects(&grid, params, &recon)?;
    let mut report = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let stem = file_stem(i, r);
        let data = simulate_tomography(&r.states.after_work, &effects)?;
        let rec = maxlike_reconstruct(&data, &effects, &recon)?;
        let sensitivity = cfg
            .tomography
            .sensitivity
            .iter()
            .map(|axis| entropy_sensitivity_sweep(&data, &effects, &recon, axis))
            .collect::<crate::Result<Vec<_>>>()?;
        w.json(&format!("grid_{stem}.json"), &data.records())?;
        w.json(&format!("reconstruction_{stem}.json"), &rec.export())?;
        report.push(EntropyReportRow {
            prep: r.scenario.prep.label(),
            alpha_in: r.scenario.alpha_in,
            s_d_direct: r.entropies.s_d_work,
            s_d_reconstructed: rec.entropy,
            delta_s_s: r.entropies.s_s_prep - r.entropies.s_s_work,
            converged: rec.converged,
            iterations: rec.iterations,
            rms_residual: rec.rms_residual,
            sensitivity,
        });
    }
    w.json("entropy_report.json", &report)?;
    Ok(w.written)
}

/// Reads a grid written by `tomography` or a bare record list.
pub fn read_grid_file(path: &Path) -> Result<TomographyGrid, CliError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum GridFile {
        Wrapped { data: Vec<TomographyRecord> },
        Bare(Vec<TomographyRecord>),
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: GridFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let records = match file {
        GridFile::Wrapped { data } | GridFile::Bare(data) => data,
    };
    Ok(TomographyGrid::from_records(&records)?)
}

/// α_in ↔ photon number lookup row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha_in: f64,
    pub nbar: f64,
    pub sqrt_nbar: f64,
}

/// Output of `calibrate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Peak Rabi frequency of the sequential π-pulse, rad/s.
    pub pi_amplitude: f64,
    /// Excited population it reaches from |g⟩ with decoherence on.
    pub pi_fidelity: f64,
    /// Decoherence-free calibrated amplitude and the area-theorem value.
    pub pi_amplitude_ideal: f64,
    pub pi_amplitude_area_theorem: f64,
    pub displacement_per_alpha: f64,
    pub alpha_table: Vec<AlphaRow>,
    pub true_gain: GainModel,
    pub gain: GainFit,
}

impl CalibrationReport {
    pub fn calibration(&self) -> Calibration {
        Calibration {
            pi_amplitude: Some(self.pi_amplitude),
            pi_fidelity: Some(self.pi_fidelity),
            displacement_per_alpha: self.displacement_per_alpha,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum File {
            Wrapped { data: CalibrationReport },
            Bare(CalibrationReport),
        }
        let f: File = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(match f {
            File::Wrapped { data } | File::Bare(data) => data,
        })
    }
}

/// Default α_in table when the config does not sweep.
const CALIBRATION_ALPHAS: SweepSpec = SweepSpec::Range { start: 0.0, stop: 0.3, count: 7 };

pub fn cmd_calibrate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve(cfg);
    let params = &cfg.device;
    let mut w = Writer::new(out, &cfg)?;
    let cal = calibration(&cfg)?;
    let shape = PulseShape::gaussian(SEQUENTIAL_SIGMA);
    let window = 4.0 * SEQUENTIAL_SIGMA;
    let ideal = calibrate_pi_amplitude(&params.clone().without_decoherence(), shape, window)?;

    let mut alphas = cfg.alpha_in.resolve(cfg.sequence_kind, params, &cal)?;
    if alphas.len() < 2 {
        alphas = CALIBRATION_ALPHAS.resolve(cfg.sequence_kind, params, &cal)?;
    }
    let mut table = alphas
        .iter()
        .map(|&a| {
            let nbar = alpha_to_nbar(a, params, &cal)?;
            Ok(AlphaRow { alpha_in: a, nbar, sqrt_nbar: nbar.max(0.0).sqrt() })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    table.sort_by(|a, b| a.alpha_in.total_cmp(&b.alpha_in));
    if let Some(pair) = table.windows(2).find(|p| p[1].sqrt_nbar <= p[0].sqrt_nbar) {
        return Err(Error::CalibrationFailed(format!(
            "photon number not increasing between α_in = {} and {}",
            pair[0].alpha_in, pair[1].alpha_in
        ))
        .into());
    }

    let sz0 = 2.0 * params.p_e0 - 1.0;
    let s = &cfg.calibration;
    let clean = synthetic_amplitudes(&s.true_gain, &s.rabi_frequencies, params.gamma_b, sz0)?;
    let samples = if s.noise > 0.0 { with_multiplicative_noise(&clean, s.noise, cfg.seed) } else { clean };
    let gain = calibrate_gain(&samples, sz0, params.gamma_b)?;

    let report = CalibrationReport {
        pi_amplitude: cal.pi_amplitude.ok_or(Error::CalibrationRequired)?,
        pi_fidelity: cal.pi_fidelity.unwrap_or(params.f_pi),
        pi_amplitude_ideal: ideal,
        pi_amplitude_area_theorem: std::f64::consts::PI / shape.area(window),
        displacement_per_alpha: cal.displacement_per_alpha,
        alpha_table: table,
        true_gain: s.true_gain,
        gain,
    };
    w.json("calibration.json", &report)?;
    Ok(w.written)
}

/// Runs a preset with command-line overrides.
pub fn run_preset(preset: &Preset, overrides: &Overrides, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let cfg = overrides.apply(preset.config.clone());
    match preset.task {
        PresetTask::Simulate => cmd_simulate(&cfg, out),
        PresetTask::Tomography => cmd_tomography(&cfg, out),
        PresetTask::Calibrate => cmd_calibrate(&cfg, out),
    }
}
