// SPDX-License-Identifier: Apache-2.0

//! Demon scenarios: a preparation, an encoding amplitude and a protocol,
//! evolved as a weighted mixture of pulse-sequence branches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::dynamics::{evolve, equilibrium_state, EvolveOptions, Trajectory, DEMON_BATH_TEMPERATURE};
use crate::error::{Error, Result};
use crate::operators::{number_operator, partial_trace, von_neumann_entropy, CMatrix, DensityMatrix, Subsystem, C64};
use crate::sequences::{
    encoded_cavity_state_with, make_continuous_sequence, make_sequential_sequence, prep_probability, Calibration,
    PrepPulse, PulseSequence, with_pi_prefix, CONTINUOUS_SIGMA, SEQUENTIAL_SIGMA,
};
use crate::thermo::{boltzmann_population, work, WorkRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Sequential,
    Continuous,
}

/// Initial system state produced by step ①.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Preparation {
    /// Equilibrium with the fridge, no preparation pulse.
    Equilibrium,
    /// Effective thermal bath at `temperature` K (`null` in JSON = infinite).
    Thermal {
        #[serde(with = "temperature_or_null")]
        temperature: f64,
    },
    /// Equal superposition of |g⟩ and |e⟩.
    Superposition,
    /// A π-pulse on every run.
    Excited,
}

mod temperature_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Preparation {
    pub fn thermal(temperature: f64) -> Self {
        Preparation::Thermal { temperature }
    }

    pub fn infinite_temperature() -> Self {
        Preparation::Thermal { temperature: f64::INFINITY }
    }

    pub fn label(&self) -> String {
        match self {
            Preparation::Equilibrium => "equilibrium".into(),
            Preparation::Thermal { temperature } if temperature.is_infinite() => "thermal_inf".into(),
            Preparation::Thermal { temperature } => format!("thermal_{:.0}mK", temperature * 1e3),
            Preparation::Superposition => "superposition".into(),
            Preparation::Excited => "excited".into(),
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match self {
            Preparation::Thermal { temperature } => Some(*temperature),
            _ => None,
        }
    }
}

/// One demon run specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub protocol: Protocol,
    pub prep: Preparation,
    pub alpha_in: f64,
    /// Free evolution after step ③ (step ④), s.
    #[serde(default = "default_reset")]
    pub reset_duration: f64,
    /// Output grid spacing, s.
    #[serde(default = "default_output_step")]
    pub output_step: f64,
}

fn default_reset() -> f64 {
    DEFAULT_RESET
}

fn default_output_step() -> f64 {
    DEFAULT_OUTPUT_STEP
}

/// Step ④ length: about one cavity lifetime.
pub const DEFAULT_RESET: f64 = 200e-9;
pub const DEFAULT_OUTPUT_STEP: f64 = 1e-9;

impl Scenario {
    pub fn new(protocol: Protocol, prep: Preparation, alpha_in: f64) -> Self {
        Scenario { protocol, prep, alpha_in, reset_duration: DEFAULT_RESET, output_step: DEFAULT_OUTPUT_STEP }
    }
}

/// Run-time knobs shared by all scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub tol: f64,
    pub fixed_step: Option<f64>,
    pub demon_temperature: f64,
    pub check_positivity: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { tol: 1e-8, fixed_step: None, demon_temperature: DEMON_BATH_TEMPERATURE, check_positivity: false }
    }
}

/// Weighted pulse sequence; the scenario state is the weighted sum of the
/// branch states.
#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    pub sequence: PulseSequence,
}

fn continuous(start_ns: f64, alpha: f64, params: &DeviceParams, calibration: &Calibration) -> Result<PulseSequence> {
    make_continuous_sequence(start_ns * 1e-9, alpha, params, calibration)
}

/// Expands a scenario into its preparation branches.
pub fn branches(scenario: &Scenario, params: &DeviceParams, calibration: &Calibration) -> Result<Vec<Branch>> {
    let alpha = scenario.alpha_in;
    // (weight, sequential prep, continuous start in ns, continuous π prefix)
    let plan: Vec<(f64, PrepPulse, f64, bool)> = match scenario.prep {
        Preparation::Equilibrium => vec![(1.0, PrepPulse::None, 400.0, false)],
        Preparation::Excited => vec![(1.0, PrepPulse::Pi, 200.0, false)],
        Preparation::Superposition => vec![(1.0, PrepPulse::PiHalf, 300.0, false)],
        Preparation::Thermal { temperature } => {
            let pe = if temperature.is_infinite() { 0.5 } else { boltzmann_population(temperature, params.f_s) };
            if pe + 1e-15 < params.p_e0 {
                return Err(Error::UnreachableTemperature {
                    target: temperature,
                    floor: crate::thermo::temperature_from_population(params.p_e0, params.f_s).unwrap_or(0.0),
                });
            }
            let p = prep_probability(pe, params.p_e0, calibration.pi_fidelity.unwrap_or(params.f_pi));
            // the continuous protocol then runs its ≈2π start on the thermal state
            vec![(p, PrepPulse::Pi, 400.0, true), (1.0 - p, PrepPulse::None, 400.0, false)]
        }
    };
    let mut out: Vec<Branch> = plan
        .into_iter()
        .filter(|(w, ..)| *w > 0.0)
        .map(|(weight, prep, start, pi_prefix)| {
            let sequence = match scenario.protocol {
                Protocol::Sequential => make_sequential_sequence(prep, alpha, params, calibration)?,
                Protocol::Continuous if pi_prefix => with_pi_prefix(&continuous(start, alpha, params, calibration)?, calibration)?,
                Protocol::Continuous => continuous(start, alpha, params, calibration)?,
            };
            Ok(Branch { weight, sequence })
        })
        .collect::<Result<_>>()?;
    // shorter preparations idle first so that step ③ is simultaneous
    let latest = out.iter().map(|b| b.sequence.markers.work_start).fold(0.0, f64::max);
    for b in &mut out {
        let lag = latest - b.sequence.markers.work_start;
        if lag > 0.0 {
            b.sequence = b.sequence.delayed(lag);
        }
    }
    Ok(out)
}

/// States at the protocol step boundaries.
#[derive(Clone, Debug)]
pub struct StepStates {
    pub initial: DensityMatrix,
    pub after_prep: DensityMatrix,
    pub after_encode: DensityMatrix,
    pub after_work: DensityMatrix,
    pub after_reset: DensityMatrix,
}

/// Entropies in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entropies {
    /// System entropy at the end of step ①.
    pub s_s_prep: f64,
    /// System entropy at the end of step ③.
    pub s_s_work: f64,
    /// Demon entropy at the end of step ③.
    pub s_d_work: f64,
    /// System entropy at the end of step ④.
    pub s_s_reset: f64,
}

#[derive(Clone, Debug)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub branches: Vec<Branch>,
    /// Weighted mixture of the branch trajectories.
    pub trajectory: Trajectory,
    pub work: WorkRecord,
    pub states: StepStates,
    pub entropies: Entropies,
    /// Mean photon number encoded from |g⟩ by the step-② pulse.
    pub nbar: f64,
    /// Excited population at the end of step ④.
    pub final_pe: f64,
    /// Vacuum population of the encoded cavity state from |g⟩.
    pub encoded_vacuum: f64,
}

/// Summary row for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub protocol: Protocol,
    pub prep: String,
    pub alpha_in: f64,
    pub nbar: f64,
    pub work_hfs: f64,
    pub heat_hfs: f64,
    pub delta_u_hfs: f64,
    pub energy_residual_hfs: f64,
    pub final_pe: f64,
    pub entropies: Entropies,
}

impl ScenarioResult {
    pub fn summary(&self) -> ScenarioSummary {
        ScenarioSummary {
            protocol: self.scenario.protocol,
            prep: self.scenario.prep.label(),
            alpha_in: self.scenario.alpha_in,
            nbar: self.nbar,
            work_hfs: self.work.work_over_hfs,
            heat_hfs: self.work.heat_over_hfs,
            delta_u_hfs: self.work.delta_u_over_hfs,
            energy_residual_hfs: self.work.energy_residual(),
            final_pe: self.final_pe,
            entropies: self.entropies,
        }
    }
}

/// Uniform grid on `[0, end]` with every marker inserted.
fn output_grid(end: f64, step: f64, marks: &[f64]) -> Vec<f64> {
    let n = (end / step).round().max(1.0) as usize;
    let mut t: Vec<f64> = (0..=n).map(|k| end * k as f64 / n as f64).collect();
    t.extend(marks.iter().copied().filter(|&m| m > 0.0 && m < end));
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * step);
    t
}

fn weighted_sum(parts: &[(f64, &DensityMatrix)]) -> DensityMatrix {
    let space = parts[0].1.space();
    let dim = space.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (w, r) in parts {
        m += r.matrix() * C64::new(*w, 0.0);
    }
    DensityMatrix::new_unchecked(space, m)
}

fn mix_series(parts: &[(f64, &Vec<f64>)]) -> Vec<f64> {
    let n = parts[0].1.len();
    (0..n).map(|i| parts.iter().map(|(w, s)| w * s[i]).sum()).collect()
}

fn mix_trajectories(trajs: &[(f64, Trajectory)]) -> Trajectory {
    let pick = |f: fn(&Trajectory) -> &Vec<f64>| mix_series(&trajs.iter().map(|(w, t)| (*w, f(t))).collect::<Vec<_>>());
    let first = &trajs[0].1;
    let snapshots = first
        .snapshots
        .iter()
        .enumerate()
        .map(|(k, (t, _))| (*t, weighted_sum(&trajs.iter().map(|(w, tr)| (*w, &tr.snapshots[k].1)).collect::<Vec<_>>())))
        .collect();
    let min_eigenvalue = if first.min_eigenvalue.is_empty() {
        Vec::new()
    } else {
        (0..first.min_eigenvalue.len())
            .map(|i| trajs.iter().map(|(_, t)| t.min_eigenvalue[i]).fold(f64::INFINITY, f64::min))
            .collect()
    };
    Trajectory {
        t: first.t.clone(),
        sx: pick(|t| &t.sx),
        sy: pick(|t| &t.sy),
        sz: pick(|t| &t.sz),
        nbar: pick(|t| &t.nbar),
        p0_cavity: pick(|t| &t.p0_cavity),
        trace_err: pick(|t| &t.trace_err),
        hermiticity_err: pick(|t| &t.hermiticity_err),
        min_eigenvalue,
        rabi: pick(|t| &t.rabi),
        rabi_left: pick(|t| &t.rabi_left),
        purity: pick(|t| &t.purity),
        snapshots,
        final_state: weighted_sum(&trajs.iter().map(|(w, t)| (*w, &t.final_state)).collect::<Vec<_>>()),
    }
}

/// Evolves every branch from equilibrium and combines the results.
pub fn run_scenario(
    params: &DeviceParams,
    calibration: &Calibration,
    scenario: &Scenario,
    opts: &RunOptions,
) -> Result<ScenarioResult> {
    params.validate()?;
    if !(scenario.reset_duration >= 0.0) || !(scenario.output_step > 0.0) {
        return Err(Error::Parameter("reset duration must be >= 0 and output step > 0".into()));
    }
    let branches = branches(scenario, params, calibration)?;
    let markers = branches[0].sequence.markers;
    let seq_end = branches.iter().map(|b| b.sequence.total_duration).fold(0.0, f64::max);
    let end = seq_end + scenario.reset_duration;
    let marks = [markers.prep_end, markers.encode_start, markers.encode_end, markers.work_start, markers.work_end, seq_end];
    let grid = output_grid(end, scenario.output_step, &marks);
    let snaps = [0.0, markers.prep_end, markers.encode_end, markers.work_end, end];
    let evolve_opts = EvolveOptions {
        tol: opts.tol,
        fixed_step: opts.fixed_step,
        snapshot_times: snaps.to_vec(),
        check_positivity: opts.check_positivity,
    };
    let rho0 = equilibrium_state(params, opts.demon_temperature)?;
    let trajs: Vec<(f64, Trajectory)> = branches
        .par_iter()
        .map(|b| evolve(&rho0, params, &b.sequence, &grid, &evolve_opts).map(|t| (b.weight, t)))
        .collect::<Result<_>>()?;
    let traj = mix_trajectories(&trajs);

    let state_at = |t: f64| -> Result<DensityMatrix> {
        traj.snapshot_at(t).cloned().ok_or_else(|| Error::Parameter(format!("no snapshot at {t:e} s")))
    };
    let states = StepStates {
        initial: state_at(0.0)?,
        after_prep: state_at(markers.prep_end)?,
        after_encode: state_at(markers.encode_end)?,
        after_work: state_at(markers.work_end)?,
        after_reset: state_at(end)?,
    };
    let qubit = |r: &DensityMatrix| partial_trace(r, Subsystem::Qubit);
    let entropies = Entropies {
        s_s_prep: von_neumann_entropy(&qubit(&states.after_prep)?),
        s_s_work: von_neumann_entropy(&qubit(&states.after_work)?),
        s_d_work: von_neumann_entropy(&partial_trace(&states.after_work, Subsystem::Cavity)?),
        s_s_reset: von_neumann_entropy(&qubit(&states.after_reset)?),
    };
    let final_pe = qubit(&states.after_reset)?.population(1);

    let sigma = match scenario.protocol {
        Protocol::Sequential => SEQUENTIAL_SIGMA,
        Protocol::Continuous => CONTINUOUS_SIGMA,
    };
    let encoded = encoded_cavity_state_with(scenario.alpha_in, sigma, params, calibration)?;
    let nbar = encoded.expect(&number_operator(params.n_trunc)?)?.re;
    let encoded_vacuum = encoded.population(0);

    let record = work(
        &traj,
        (markers.work_start, markers.work_end),
        params.gamma_b,
        params.f_s,
        &scenario.prep.label(),
        nbar,
        scenario.prep.temperature(),
    )?;
    Ok(ScenarioResult {
        scenario: *scenario,
        branches,
        trajectory: traj,
        work: record,
        states,
        entropies,
        nbar,
        final_pe,
        encoded_vacuum,
    })
}

/// Runs scenarios in parallel, keeping input order.
pub fn run_many(
    params: &DeviceParams,
    calibration: &Calibration,
    scenarios: &[Scenario],
    opts: &RunOptions,
) -> Result<Vec<ScenarioResult>> {
    scenarios.par_iter().map(|s| run_scenario(params, calibration, s, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_branches_weights() {
        let p = DeviceParams::default().with_n_trunc(4);
        let cal = Calibration { pi_amplitude: Some(1e8), ..Default::default() };
        let s = Scenario::new(Protocol::Continuous, Preparation::infinite_temperature(), 0.0);
        let b = branches(&s, &p, &cal).unwrap();
        assert_eq!(b.len(), 2);
        assert!((b[0].weight - 1.0 / (2.0 * 0.92)).abs() < 1e-12);
        assert!((b[0].weight + b[1].weight - 1.0).abs() < 1e-15);
        let cold = Scenario::new(Protocol::Sequential, Preparation::thermal(0.05), 0.0);
        assert!(matches!(branches(&cold, &p, &cal), Err(Error::UnreachableTemperature { .. })));
    }

    #[test]
    fn preparation_json() {
        let s = Scenario::new(Protocol::Sequential, Preparation::infinite_temperature(), 0.25);
        let text = serde_json::to_string(&s).unwrap();
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn grid_contains_markers() {
        let g = output_grid(100e-9, 1e-9, &[12.345e-9]);
        assert!(g.iter().any(|&t| (t - 12.345e-9).abs() < 1e-18));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
