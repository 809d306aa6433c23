// SPDX-License-Identifier: Apache-2.0

//! Work, heat, temperatures and the heterodyne power model.
//!
//! Energies are expressed in units of the qubit quantum `h f_S` unless a
//! function says otherwise.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::operators::{DensityMatrix, Space};

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// `h f / k_B`, K.
pub fn quantum_temperature(f: f64) -> f64 {
    PLANCK * f / BOLTZMANN
}

/// Emitted photon rate split into its stimulated (work) and spontaneous
/// (heat) parts, photons/s.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PowerSeries {
    pub total: Vec<f64>,
    pub work: Vec<f64>,
    pub heat: Vec<f64>,
}

/// `P/hf_S = γ_b (1 + ⟨σz⟩)/2 + (Ω/2)⟨σx⟩` pointwise.
pub fn power_from_bloch(sx: &[f64], sz: &[f64], omega: &[f64], gamma_b: f64) -> Result<PowerSeries> {
    if sx.len() != sz.len() || sx.len() != omega.len() {
        return Err(Error::Shape(format!(
            "series lengths differ: sx {}, sz {}, omega {}",
            sx.len(),
            sz.len(),
            omega.len()
        )));
    }
    let heat: Vec<f64> = sz.iter().map(|z| gamma_b * (1.0 + z) / 2.0).collect();
    let work: Vec<f64> = sx.iter().zip(omega).map(|(x, w)| 0.5 * w * x).collect();
    let total = heat.iter().zip(&work).map(|(h, w)| h + w).collect();
    Ok(PowerSeries { total, work, heat })
}

/// Extracted power along a trajectory, using its recorded Rabi frequency.
pub fn extracted_power(traj: &Trajectory, gamma_b: f64) -> PowerSeries {
    power_from_bloch(&traj.sx, &traj.sz, &traj.rabi, gamma_b).expect("trajectory series share one grid")
}

/// Composite Simpson rule on a possibly nonuniform grid. An odd interval
/// count closes with the quadratic through the last three points.
fn simpson(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len();
    if n < 3 {
        return t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum();
    }
    let mut sum = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let (h0, h1) = (t[i + 1] - t[i], t[i + 2] - t[i + 1]);
        sum += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * y[i] + (h0 + h1).powi(2) / (h0 * h1) * y[i + 1] + (2.0 - h0 / h1) * y[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        let (h0, h1) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
        sum += (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1)) * y[n - 1]
            + (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0) * y[n - 2]
            - h1.powi(3) / (6.0 * h0 * (h0 + h1)) * y[n - 3];
    }
    sum
}

/// Power and work over one step-③ window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub t_grid: Vec<f64>,
    pub power_over_hfs: Vec<f64>,
    pub work_power_over_hfs: Vec<f64>,
    pub heat_power_over_hfs: Vec<f64>,
    pub work_over_hfs: f64,
    pub heat_over_hfs: f64,
    /// Excited population change over the window.
    pub delta_u_over_hfs: f64,
    pub work_joules: f64,
    pub init_label: String,
    pub nbar: f64,
    pub temperature: Option<f64>,
}

/// JSON summary of a [`WorkRecord`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkSummary {
    pub work_hfs: f64,
    pub heat_hfs: f64,
    pub nbar: f64,
    pub prep: String,
    #[serde(rename = "T_K")]
    pub t_k: Option<f64>,
}

impl WorkRecord {
    /// `W + ΔU_S + Q_spont` in units of `h f_S`.
    pub fn energy_residual(&self) -> f64 {
        self.work_over_hfs + self.delta_u_over_hfs + self.heat_over_hfs
    }

    pub fn summary(&self) -> WorkSummary {
        WorkSummary {
            work_hfs: self.work_over_hfs,
            heat_hfs: self.heat_over_hfs,
            nbar: self.nbar,
            prep: self.init_label.clone(),
            t_k: self.temperature.filter(|t| t.is_finite()),
        }
    }

    /// CSV with columns `t_s, p_total, p_work, p_heat` (photons/s).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_s,p_total,p_work,p_heat")?;
        for i in 0..self.t_grid.len() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e}",
                self.t_grid[i], self.power_over_hfs[i], self.work_power_over_hfs[i], self.heat_power_over_hfs[i]
            )?;
        }
        Ok(())
    }
}

/// Integrates the extracted power over `window` (both ends must be output
/// times of the trajectory).
pub fn work(
    traj: &Trajectory,
    window: (f64, f64),
    gamma_b: f64,
    f_s: f64,
    init_label: &str,
    nbar: f64,
    temperature: Option<f64>,
) -> Result<WorkRecord> {
    let (a, b) = window;
    let scale = 1e-9 * (b - a).abs().max(1e-12);
    let i0 = traj.index_of(a);
    let i1 = traj.index_of(b);
    if (traj.t[i0] - a).abs() > scale || (traj.t[i1] - b).abs() > scale || i1 <= i0 {
        return Err(Error::Parameter(format!("work window [{a:.3e}, {b:.3e}] s is not on the trajectory grid")));
    }
    // drive values from inside the window at both edges
    let mut rabi = traj.rabi_left[i0..=i1].to_vec();
    rabi[0] = traj.rabi[i0];
    let p = power_from_bloch(&traj.sx[i0..=i1], &traj.sz[i0..=i1], &rabi, gamma_b)?;
    let t = traj.t[i0..=i1].to_vec();
    let work_power = p.work.clone();
    let heat_power = p.heat.clone();
    let w = simpson(&t, &work_power);
    let q = simpson(&t, &heat_power);
    if w.abs() > 1.02 {
        log::warn!("work {w:.4} hf_S exceeds one quantum");
    }
    let pe = |i: usize| (1.0 + traj.sz[i]) / 2.0;
    Ok(WorkRecord {
        power_over_hfs: p.total,
        work_power_over_hfs: work_power,
        heat_power_over_hfs: heat_power,
        t_grid: t,
        work_over_hfs: w,
        heat_over_hfs: q,
        delta_u_over_hfs: pe(i1) - pe(i0),
        work_joules: w * PLANCK * f_s,
        init_label: init_label.to_string(),
        nbar,
        temperature,
    })
}

/// Binary entropy `−p ln p − (1−p) ln(1−p)` in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    let p = p.clamp(0.0, 1.0);
    h(p) + h(1.0 - p)
}

/// `U_S = h f_S ⟨e|ρ_S|e⟩`, J.
pub fn internal_energy(rho_s: &DensityMatrix, f_s: f64) -> Result<f64> {
    if rho_s.space() != Space::qubit() {
        return Err(Error::Shape("internal energy needs a qubit density matrix".into()));
    }
    Ok(PLANCK * f_s * rho_s.population(1))
}

/// `(1 + e^{hf/k_B T})⁻¹`.
pub fn boltzmann_population(temperature: f64, f: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = quantum_temperature(f) / temperature;
    // e^{−x}/(1 + e^{−x}) avoids overflow at low temperature
    let e = (-x).exp();
    e / (1.0 + e)
}

/// Inverse of [`boltzmann_population`].
pub fn temperature_from_population(p_e: f64, f: f64) -> Result<f64> {
    if p_e >= 0.5 {
        return Err(Error::NegativeTemperature(p_e));
    }
    if !(p_e > 0.0) {
        return Err(Error::Parameter(format!("population must be positive, got {p_e}")));
    }
    Ok(quantum_temperature(f) / ((1.0 - p_e) / p_e).ln())
}

/// Demon temperature from the one-photon peak, comparing `P(1)` with
/// `P(0) = 1 − P(1)`.
pub fn demon_temperature_from_p1(p1: f64, f_d: f64) -> Result<f64> {
    if p1 == 0.0 {
        return Ok(0.0);
    }
    if !(p1 > 0.0 && p1 < 0.5) {
        return Err(Error::Parameter(format!("P(1) = {p1} outside (0, 0.5)")));
    }
    Ok(quantum_temperature(f_d) / ((1.0 - p1) / p1).ln())
}

/// Rabi contrast at equilibrium, `C^eq = p_e(T)`.
pub fn contrast_eq(temperature: f64, f_s: f64) -> f64 {
    boltzmann_population(temperature, f_s)
}

/// Rabi contrast after a π-pulse of fidelity `f_pi`.
pub fn contrast_pi(temperature: f64, f_pi: f64, f_s: f64) -> f64 {
    let pe = boltzmann_population(temperature, f_s);
    f_pi * (1.0 - pe) + (1.0 - f_pi) * pe
}

/// Solves `C^π / C^eq = 1 + F_π (e^x − 1)` for `T = hf_S / (k_B x)`.
pub fn temperature_from_contrast(c_eq: f64, c_pi: f64, f_pi: f64, f_s: f64) -> Result<f64> {
    if !(c_eq > 0.0) || !(f_pi > 0.0 && f_pi <= 1.0) {
        return Err(Error::Parameter(format!("need c_eq > 0 and 0 < F_pi <= 1 (c_eq = {c_eq}, F_pi = {f_pi})")));
    }
    let ratio = c_pi / c_eq;
    if !(ratio > 1.0) {
        return Err(Error::InconsistentContrast(ratio));
    }
    let x = (1.0 + (ratio - 1.0) / f_pi).ln();
    Ok(quantum_temperature(f_s) / x)
}

/// `w / (k_B T ln 2)`.
pub fn landauer_ratio(w: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::Parameter(format!("temperature must be positive, got {temperature}")));
    }
    Ok(w / (BOLTZMANN * temperature * std::f64::consts::LN_2))
}

mod infinite_as_null {
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

/// Amplification chain with amplitude gain `√G(Ω) = √G₀ (1 − Ω/Ω_∞)` and an
/// additive power offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainModel {
    pub g0: f64,
    /// rad/s; `null` in JSON for a constant gain.
    #[serde(with = "infinite_as_null")]
    pub omega_inf: f64,
    pub offset: f64,
}

impl GainModel {
    pub fn new(g0: f64, omega_inf: f64, offset: f64) -> Result<Self> {
        if !(g0 > 0.0) || !(omega_inf > 0.0) {
            return Err(Error::Parameter(format!("gain needs g0 > 0 and omega_inf > 0 (g0 = {g0}, omega_inf = {omega_inf})")));
        }
        Ok(GainModel { g0, omega_inf, offset })
    }

    pub fn amplitude_gain(&self, omega: f64) -> Result<f64> {
        if omega.abs() >= self.omega_inf {
            return Err(Error::GainDomain { omega, omega_inf: self.omega_inf });
        }
        Ok(self.g0.sqrt() * (1.0 - omega.abs() / self.omega_inf))
    }

    pub fn power_gain(&self, omega: f64) -> Result<f64> {
        Ok(self.amplitude_gain(omega)?.powi(2))
    }
}

/// Averaged heterodyne quadratures and power.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Heterodyne {
    pub t: Vec<f64>,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
    pub power: Vec<f64>,
}

/// Incoming amplitude driving Rabi frequency `omega` through port b, with the
/// real-negative phase convention, √photons/s.
pub fn input_amplitude(omega: f64, gamma_b: f64) -> f64 {
    -omega / (2.0 * gamma_b.sqrt())
}

/// Detector output for a qubit driven at constant Rabi frequency `omega`:
/// `b_out = β_in − √γ_b ⟨σ₋⟩`, `Ī = √G Re b_out`, `Q̄ = √G Im b_out`,
/// `I²+Q² = G ⟨b_out† b_out⟩ + offset`.
pub fn synthesize_heterodyne(traj: &Trajectory, gain: &GainModel, omega: f64, gamma_b: f64) -> Result<Heterodyne> {
    let amp = gain.amplitude_gain(omega)?;
    let g = amp * amp;
    let beta = input_amplitude(omega, gamma_b);
    let sg = gamma_b.sqrt();
    let mut out = Heterodyne { t: traj.t.clone(), ..Default::default() };
    for k in 0..traj.t.len() {
        // ⟨σ₋⟩ = (⟨σx⟩ − i⟨σy⟩)/2
        let (re_sm, im_sm) = (traj.sx[k] / 2.0, -traj.sy[k] / 2.0);
        let b_re = beta - sg * re_sm;
        let b_im = -sg * im_sm;
        let pe = (1.0 + traj.sz[k]) / 2.0;
        let photons = beta * beta - 2.0 * sg * beta * re_sm + gamma_b * pe;
        out.i.push(amp * b_re);
        out.q.push(amp * b_im);
        out.power.push(gain.offset + g * photons);
    }
    Ok(out)
}

/// Damped-Rabi oscillation amplitude on Ī: `√G √γ_p |⟨σz⟩⁰| / 2`.
pub fn rabi_amplitude_i(gain: &GainModel, omega: f64, gamma_p: f64, sz0: f64) -> Result<f64> {
    Ok(gain.amplitude_gain(omega)? * gamma_p.sqrt() * sz0.abs() / 2.0)
}

/// Damped-Rabi oscillation amplitude on `I²+Q²`: `G |⟨σz⟩⁰| √(γ_p² + Ω²) / 2`.
pub fn rabi_amplitude_power(gain: &GainModel, omega: f64, gamma_p: f64, sz0: f64) -> Result<f64> {
    Ok(gain.power_gain(omega)? * sz0.abs() * gamma_p.hypot(omega) / 2.0)
}

/// One calibration point: Rabi frequency and the two oscillation amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSample {
    pub omega: f64,
    pub a_i: f64,
    pub a_power: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainFit {
    pub model: GainModel,
    /// Fitted `1/Ω_∞`, may be slightly negative on noisy constant-gain data.
    pub inv_omega_inf: f64,
    /// RMS residual of the √G estimates.
    pub residual_rms: f64,
}

/// Least-squares fit of `√G(Ω) = √G₀ − (√G₀/Ω_∞) Ω` to the √G estimates
/// implied by both amplitude series.
pub fn calibrate_gain(samples: &[AmplitudeSample], sz0: f64, gamma_p: f64) -> Result<GainFit> {
    if !(sz0.abs() > 0.0) || !(gamma_p > 0.0) {
        return Err(Error::Parameter("gain calibration needs sz0 != 0 and gamma_p > 0".into()));
    }
    let mut omegas: Vec<f64> = samples.iter().map(|s| s.omega).collect();
    omegas.sort_by(f64::total_cmp);
    omegas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    if omegas.len() < 3 {
        return Err(Error::InsufficientData(format!("need 3 distinct Rabi frequencies, got {}", omegas.len())));
    }
    let mut points = Vec::with_capacity(2 * samples.len());
    for s in samples {
        points.push((s.omega, 2.0 * s.a_i / (gamma_p.sqrt() * sz0.abs())));
        let g = 2.0 * s.a_power / (sz0.abs() * gamma_p.hypot(s.omega));
        if g > 0.0 {
            points.push((s.omega, g.sqrt()));
        }
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("Rabi frequencies do not span a range".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(intercept > 0.0) {
        return Err(Error::InsufficientData(format!("fitted zero-drive amplitude gain {intercept} is not positive")));
    }
    let inv = -slope / intercept;
    let omega_inf = if inv > 0.0 { 1.0 / inv } else { f64::INFINITY };
    let residual_rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(GainFit { model: GainModel { g0: intercept * intercept, omega_inf, offset: 0.0 }, inv_omega_inf: inv, residual_rms })
}

/// Noiseless calibration amplitudes for the given gain model.
pub fn synthetic_amplitudes(gain: &GainModel, omegas: &[f64], gamma_p: f64, sz0: f64) -> Result<Vec<AmplitudeSample>> {
    omegas
        .iter()
        .map(|&omega| {
            Ok(AmplitudeSample {
                omega,
                a_i: rabi_amplitude_i(gain, omega, gamma_p, sz0)?,
                a_power: rabi_amplitude_power(gain, omega, gamma_p, sz0)?,
            })
        })
        .collect()
}

/// Applies independent multiplicative Gaussian noise of relative width `rel`.
pub fn with_multiplicative_noise(samples: &[AmplitudeSample], rel: f64, seed: u64) -> Vec<AmplitudeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, rel.max(0.0)).expect("finite width");
    samples
        .iter()
        .map(|s| AmplitudeSample {
            omega: s.omega,
            a_i: s.a_i * (1.0 + normal.sample(&mut rng)),
            a_power: s.a_power * (1.0 + normal.sample(&mut rng)),
        })
        .collect()
}
