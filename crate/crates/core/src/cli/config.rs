// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration files.

use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::experiment::{Preparation, Protocol};
use crate::sequences::{alpha_for_nbar, Calibration, CONTINUOUS_SIGMA, SEQUENTIAL_SIGMA};
use crate::thermo::GainModel;
use crate::tomography::{ReconstructionConfig, SweepAxis, TomographyGrid};

use super::CliError;

/// One value or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepTag {
    Equilibrium,
    Superposition,
    Excited,
    ThermalInf,
}

/// A preparation by name or by target temperature in K.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrepSpec {
    Tag(PrepTag),
    Temperature {
        #[serde(rename = "T_target")]
        t_target: f64,
    },
}

impl PrepSpec {
    pub fn preparation(&self) -> Preparation {
        match *self {
            PrepSpec::Tag(PrepTag::Equilibrium) => Preparation::Equilibrium,
            PrepSpec::Tag(PrepTag::Superposition) => Preparation::Superposition,
            PrepSpec::Tag(PrepTag::Excited) => Preparation::Excited,
            PrepSpec::Tag(PrepTag::ThermalInf) => Preparation::infinite_temperature(),
            PrepSpec::Temperature { t_target } => Preparation::thermal(t_target),
        }
    }
}

/// Values of a swept real parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepSpec {
    Value(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
    /// α_in values encoding these mean photon numbers, solved at run time.
    Photons { nbar: Vec<f64> },
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec::Value(0.0)
    }
}

impl SweepSpec {
    /// Explicit values; photon targets are solved with the protocol's
    /// displacement width.
    pub fn resolve(&self, protocol: Protocol, params: &DeviceParams, calibration: &Calibration) -> crate::Result<Vec<f64>> {
        let values = match self {
            SweepSpec::Value(v) => vec![*v],
            SweepSpec::List(v) => v.clone(),
            SweepSpec::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
            SweepSpec::Photons { nbar } => {
                let sigma = match protocol {
                    Protocol::Sequential => SEQUENTIAL_SIGMA,
                    Protocol::Continuous => CONTINUOUS_SIGMA,
                };
                nbar.iter()
                    .map(|&n| if n == 0.0 { Ok(0.0) } else { alpha_for_nbar(n, sigma, params, calibration) })
                    .collect::<crate::Result<_>>()?
            }
        };
        Ok(values)
    }

    fn check(&self) -> Result<(), String> {
        let finite = |v: &f64| v.is_finite();
        let ok = match self {
            SweepSpec::Value(v) => finite(v),
            SweepSpec::List(v) => v.iter().all(finite),
            SweepSpec::Range { start, stop, .. } => finite(start) && finite(stop),
            SweepSpec::Photons { nbar } => nbar.iter().all(|n| n.is_finite() && *n >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err("sweep values must be finite".into())
        }
    }
}

/// Files a run may produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    /// Bloch and cavity series per scenario.
    Trajectory,
    /// Extracted power over the work window per scenario.
    Power,
    /// Work, heat and entropies per scenario.
    Summary,
    /// (√n̄, W) per preparation.
    WorkTable,
    /// (α_in, U_S) per preparation.
    EnergyTable,
    /// (α_in, S_S after reset) with the binary-entropy reference.
    EntropyTable,
    /// ⟨0|ρ|0⟩ after a 100 ns cavity drive per α_in.
    VacuumTable,
    /// Stationary Stark shift and measurement-induced dephasing versus
    /// cavity drive detuning.
    StarkTable,
}

impl Artifact {
    /// True when the artifact needs full demon runs.
    pub fn needs_scenarios(self) -> bool {
        !matches!(self, Artifact::VacuumTable | Artifact::StarkTable)
    }
}

/// Gain model and calibration drive used by `calibrate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub displacement_per_alpha: f64,
    /// Chain the synthetic calibration amplitudes are drawn from.
    pub true_gain: GainModel,
    /// Rabi frequencies of the calibration drives, rad/s.
    pub rabi_frequencies: Vec<f64>,
    /// Relative multiplicative noise on the synthetic amplitudes.
    pub noise: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            displacement_per_alpha: crate::sequences::DEFAULT_DISPLACEMENT_PER_ALPHA,
            true_gain: GainModel { g0: 1.0e7, omega_inf: 2.0e9, offset: 0.0 },
            rabi_frequencies: (1..=8).map(|k| k as f64 * 2.5e7).collect(),
            noise: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Desk,
    Full,
}

/// Tomography pipeline settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySettings {
    /// `None` picks the desk grid in fast mode, the full grid otherwise.
    pub grid: Option<GridKind>,
    /// `None` picks the desk reconstruction in fast mode.
    pub reconstruction: Option<ReconstructionConfig>,
    pub sensitivity: Vec<SweepAxis>,
}

impl Default for TomographySettings {
    fn default() -> Self {
        TomographySettings { grid: None, reconstruction: None, sensitivity: Vec::new() }
    }
}

impl TomographySettings {
    pub fn grid(&self, fast: bool) -> TomographyGrid {
        match self.grid.unwrap_or(if fast { GridKind::Desk } else { GridKind::Full }) {
            GridKind::Desk => TomographyGrid::desk(),
            GridKind::Full => TomographyGrid::full(),
        }
    }

    pub fn reconstruction(&self, fast: bool) -> ReconstructionConfig {
        self.reconstruction.clone().unwrap_or_else(|| if fast { ReconstructionConfig::desk() } else { ReconstructionConfig::default() })
    }
}

/// Cavity truncation used in fast mode.
pub const FAST_N_TRUNC: usize = 24;
/// Output spacing in fast mode, s.
pub const FAST_OUTPUT_STEP: f64 = 2e-9;

/// A run description. All fields but the sweep have defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub device: DeviceParams,
    #[serde(default = "default_protocol")]
    pub sequence_kind: Protocol,
    #[serde(default = "default_prep")]
    pub prep: OneOrMany<PrepSpec>,
    #[serde(default)]
    pub alpha_in: SweepSpec,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Artifact>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fast_mode: bool,
    /// Step ④ duration, s.
    #[serde(default)]
    pub reset_duration: Option<f64>,
    /// Output grid spacing, s.
    #[serde(default)]
    pub output_step: Option<f64>,
    /// Fixed integrator step, s; adaptive when absent.
    #[serde(default)]
    pub fixed_step: Option<f64>,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    #[serde(default)]
    pub tomography: TomographySettings,
}

fn default_protocol() -> Protocol {
    Protocol::Sequential
}

fn default_prep() -> OneOrMany<PrepSpec> {
    OneOrMany::One(PrepSpec::Tag(PrepTag::Equilibrium))
}

fn default_outputs() -> Vec<Artifact> {
    vec![Artifact::Summary]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            device: DeviceParams::default(),
            sequence_kind: default_protocol(),
            prep: default_prep(),
            alpha_in: SweepSpec::default(),
            outputs: default_outputs(),
            seed: 0,
            fast_mode: false,
            reset_duration: None,
            output_step: None,
            fixed_step: None,
            calibration: CalibrationSettings::default(),
            tomography: TomographySettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON, reporting line and column on failure.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), CliError> {
        self.alpha_in.check().map_err(CliError::Config)?;
        self.device.validate().map_err(|e| CliError::Config(e.to_string()))?;
        for t in [self.reset_duration, self.output_step, self.fixed_step].into_iter().flatten() {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::Config(format!("durations must be finite and nonnegative, got {t}")));
            }
        }
        Ok(())
    }

    pub fn preparations(&self) -> Vec<Preparation> {
        self.prep.to_vec().iter().map(PrepSpec::preparation).collect()
    }

    /// Device actually simulated: the truncation shrinks in fast mode.
    pub fn effective_device(&self) -> DeviceParams {
        if self.fast_mode {
            self.device.clone().with_n_trunc(self.device.n_trunc.min(FAST_N_TRUNC))
        } else {
            self.device.clone()
        }
    }

    pub fn effective_output_step(&self) -> f64 {
        self.output_step.unwrap_or(if self.fast_mode { FAST_OUTPUT_STEP } else { crate::experiment::DEFAULT_OUTPUT_STEP })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"alpha_in": {"start": 0, "stop": 0.4, "count": 5}}"#).unwrap();
        assert_eq!(cfg.sequence_kind, Protocol::Sequential);
        let v = cfg.alpha_in.resolve(Protocol::Sequential, &cfg.device, &Calibration::default()).unwrap();
        assert_eq!(v.len(), 5);
        assert!((v[4] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn preparations_by_tag_and_temperature() {
        let cfg = ExperimentConfig::from_json(r#"{"prep": ["superposition", {"T_target": 0.4}, "thermal_inf"]}"#).unwrap();
        let p = cfg.preparations();
        assert_eq!(p[0], Preparation::Superposition);
        assert_eq!(p[1], Preparation::thermal(0.4));
        assert!(p[2].temperature().unwrap().is_infinite());
    }

    #[test]
    fn parse_error_reports_position() {
        let err = ExperimentConfig::from_json("{\n  \"alpha_in\": [0.1,\n  oops]\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_field_is_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"alpha": 0.1}"#).is_err());
    }

    #[test]
    fn empty_range() {
        let s = SweepSpec::Range { start: 0.0, stop: 1.0, count: 0 };
        assert!(s.resolve(Protocol::Sequential, &DeviceParams::default(), &Calibration::default()).unwrap().is_empty());
    }

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig { fast_mode: true, ..Default::default() };
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
