// SPDX-License-Identifier: Apache-2.0

//! Built-in figure presets.

use crate::experiment::Protocol;
use crate::tomography::SweepAxis;

use super::config::{Artifact, ExperimentConfig, OneOrMany, PrepSpec, PrepTag, SweepSpec, TomographySettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetTask {
    Simulate,
    Tomography,
    Calibrate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub task: PresetTask,
    pub config: ExperimentConfig,
}

const NAMES: [&str; 6] = ["fig2", "fig3", "fig4", "figS1", "figS3", "figS4"];

fn tag(t: PrepTag) -> PrepSpec {
    PrepSpec::Tag(t)
}

fn kelvin(t: f64) -> PrepSpec {
    PrepSpec::Temperature { t_target: t }
}

fn range(stop: f64, count: usize) -> SweepSpec {
    SweepSpec::Range { start: 0.0, stop, count }
}

/// Preset by name; `fast` shrinks sweeps, truncation and tomography grid.
pub fn preset(name: &str, fast: bool) -> Option<Preset> {
    let base = ExperimentConfig { fast_mode: fast, ..Default::default() };
    let sweep = |full: usize, quick: usize| if fast { quick } else { full };
    let p = match name {
        "fig2" => Preset {
            name: "fig2",
            description: "continuous protocol, extracted power at 0 and 9 photons for four preparations",
            task: PresetTask::Simulate,
            config: ExperimentConfig {
                sequence_kind: Protocol::Continuous,
                prep: OneOrMany::Many(vec![kelvin(0.17), kelvin(0.40), tag(PrepTag::ThermalInf), tag(PrepTag::Superposition)]),
                alpha_in: SweepSpec::Photons { nbar: vec![0.0, 9.0] },
                outputs: vec![Artifact::Power, Artifact::Summary],
                ..base
            },
        },
        "fig3" => Preset {
            name: "fig3",
            description: "sequential protocol, work and final energy versus drive amplitude",
            task: PresetTask::Simulate,
            config: ExperimentConfig {
                prep: OneOrMany::Many(vec![
                    tag(PrepTag::Equilibrium),
                    kelvin(0.17),
                    kelvin(0.40),
                    tag(PrepTag::ThermalInf),
                    tag(PrepTag::Superposition),
                    tag(PrepTag::Excited),
                ]),
                alpha_in: range(0.4, sweep(17, 5)),
                outputs: vec![Artifact::WorkTable, Artifact::EnergyTable, Artifact::Summary],
                ..base
            },
        },
        "fig4" => Preset {
            name: "fig4",
            description: "demon tomography at alpha_in = 0.25 for four preparations with sensitivity sweeps",
            task: PresetTask::Tomography,
            config: ExperimentConfig {
                prep: OneOrMany::Many(vec![
                    tag(PrepTag::Equilibrium),
                    tag(PrepTag::Excited),
                    tag(PrepTag::Superposition),
                    tag(PrepTag::ThermalInf),
                ]),
                alpha_in: SweepSpec::Value(0.25),
                tomography: TomographySettings {
                    sensitivity: vec![
                        SweepAxis::NTruncRecon(vec![13, 15, 17]),
                        SweepAxis::PG(vec![0.95, 0.97, 0.99]),
                        SweepAxis::BetaMax(vec![2.5, 3.0, 3.5]),
                    ],
                    ..Default::default()
                },
                ..base
            },
        },
        "figS1" => Preset {
            name: "figS1",
            description: "system entropy after the reset versus drive amplitude, cold and hot starts",
            task: PresetTask::Simulate,
            config: ExperimentConfig {
                prep: OneOrMany::Many(vec![tag(PrepTag::Equilibrium), tag(PrepTag::ThermalInf)]),
                alpha_in: range(0.4, sweep(17, 5)),
                outputs: vec![Artifact::EntropyTable],
                ..base
            },
        },
        "figS3" => Preset {
            name: "figS3",
            description: "Stark shift and measurement-induced dephasing versus cavity drive detuning",
            task: PresetTask::Simulate,
            config: ExperimentConfig { outputs: vec![Artifact::StarkTable], ..base },
        },
        "figS4" => Preset {
            name: "figS4",
            description: "vacuum population after a 100 ns cavity drive versus drive amplitude",
            task: PresetTask::Simulate,
            config: ExperimentConfig {
                alpha_in: range(0.4, sweep(41, 9)),
                outputs: vec![Artifact::VacuumTable],
                ..base
            },
        },
        _ => return None,
    };
    Some(p)
}

pub fn presets(fast: bool) -> Vec<Preset> {
    NAMES.iter().map(|n| preset(n, fast).expect("listed preset")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_round_trips() {
        for p in presets(true) {
            let text = p.config.to_json();
            assert_eq!(ExperimentConfig::from_json(&text).unwrap(), p.config, "{}", p.name);
        }
        assert!(preset("fig9", false).is_none());
    }
}
