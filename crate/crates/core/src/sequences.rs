// SPDX-License-Identifier: Apache-2.0

//! Pulse envelopes, the sequential and continuous demon protocols, pulse
//! calibration and the effective thermal-bath preparation.

use serde::{Deserialize, Serialize};

use crate::device::{cavity_coefficient, qubit_coefficient, DeviceParams, Drive, DriveSample};
use crate::dynamics::{equilibrium_state, propagate, EvolveOptions, DEMON_BATH_TEMPERATURE};
use crate::error::{Error, Result};
use crate::operators::{number_operator, partial_trace, DensityMatrix, Subsystem, C64};

/// Gaussian width of the sequential-protocol pulses, s.
pub const SEQUENTIAL_SIGMA: f64 = 12.5e-9;
/// Gaussian width of the continuous-protocol displacement, s.
pub const CONTINUOUS_SIGMA: f64 = 10e-9;
/// Rabi period of the continuous square pulse, s.
pub const CONTINUOUS_RABI_PERIOD: f64 = 416e-9;
/// Displacement start times accepted by the continuous protocol, s.
pub const CONTINUOUS_STARTS: [f64; 3] = [200e-9, 300e-9, 400e-9];
/// Phase of every qubit drive: rotation about +y.
pub const QUBIT_PHASE: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    /// Qubit drive through port b.
    Qubit,
    /// Cavity drive through port a.
    Cavity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    /// Centered Gaussian cut at ±`truncation` around the window center.
    Gaussian { sigma: f64, truncation: f64 },
    Square,
}

/// Pulse edges closer than this to a sample time count as that time, s.
/// Absorbs rounding in shifted and summed segment times.
const EDGE_TOL: f64 = 1e-15;

impl PulseShape {
    /// Gaussian cut at ±2σ.
    pub fn gaussian(sigma: f64) -> Self {
        PulseShape::Gaussian { sigma, truncation: 2.0 * sigma }
    }

    /// Envelope value at offset `tau` from the segment start, on `[0, duration)`.
    pub fn envelope(&self, tau: f64, duration: f64) -> f64 {
        if !(tau >= -EDGE_TOL && tau < duration - EDGE_TOL) {
            return 0.0;
        }
        self.profile(tau, duration)
    }

    /// Same as [`PulseShape::envelope`] on `(0, duration]`.
    pub fn envelope_left(&self, tau: f64, duration: f64) -> f64 {
        if !(tau > EDGE_TOL && tau <= duration + EDGE_TOL) {
            return 0.0;
        }
        self.profile(tau, duration)
    }

    fn profile(&self, tau: f64, duration: f64) -> f64 {
        let tau = tau.clamp(0.0, duration);
        match *self {
            PulseShape::Square => 1.0,
            PulseShape::Gaussian { sigma, .. } => {
                let x = (tau - duration / 2.0) / sigma;
                (-0.5 * x * x).exp()
            }
        }
    }

    /// ∫ envelope dt over a window of length `duration`.
    pub fn area(&self, duration: f64) -> f64 {
        match *self {
            PulseShape::Square => duration,
            PulseShape::Gaussian { sigma, .. } => {
                let half = duration / 2.0;
                sigma * (2.0 * std::f64::consts::PI).sqrt() * libm::erf(half / (sigma * std::f64::consts::SQRT_2))
            }
        }
    }
}

/// One drive pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSegment {
    pub target: Port,
    pub shape: PulseShape,
    /// Start time, s.
    pub start: f64,
    /// Window length, s.
    pub duration: f64,
    /// Peak amplitude. Qubit: `Ω e^{iφ}` (rad/s), φ the rotation-axis angle
    /// from +x. Cavity: ε_d (√photons/s).
    pub amplitude: C64,
    /// Carrier offset from the port frequency, Hz.
    pub carrier_detuning: f64,
}

impl PulseSegment {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.start.is_finite() {
            return Err(Error::Parameter(format!("segment needs a positive duration, got {}", self.duration)));
        }
        if let PulseShape::Gaussian { sigma, truncation } = self.shape {
            if !(sigma > 0.0) || (2.0 * truncation - self.duration).abs() > 1e-6 * self.duration {
                return Err(Error::Parameter(format!(
                    "gaussian window {} s does not match truncation ±{} s",
                    self.duration, truncation
                )));
            }
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    /// Complex envelope at time `t` (zero outside the window).
    pub fn value(&self, t: f64) -> C64 {
        self.amplitude * self.shape.envelope(t - self.start, self.duration)
    }

    fn value_left(&self, t: f64) -> C64 {
        self.amplitude * self.shape.envelope_left(t - self.start, self.duration)
    }

    /// ∫ |envelope| dt times |amplitude|.
    pub fn area(&self) -> f64 {
        self.amplitude.norm() * self.shape.area(self.duration)
    }
}

/// Time points delimiting the protocol steps, s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Markers {
    pub prep_start: f64,
    pub prep_end: f64,
    pub encode_start: f64,
    pub encode_end: f64,
    pub work_start: f64,
    pub work_end: f64,
}

/// Ordered list of pulses with protocol markers.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    pub segments: Vec<PulseSegment>,
    pub total_duration: f64,
    pub markers: Markers,
}

impl PulseSequence {
    pub fn validate(&self) -> Result<()> {
        for s in &self.segments {
            s.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let seq: PulseSequence = serde_json::from_str(text)?;
        seq.validate()?;
        Ok(seq)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence serializes")
    }

    pub fn segments_on(&self, port: Port) -> impl Iterator<Item = &PulseSegment> {
        self.segments.iter().filter(move |s| s.target == port)
    }

    /// Same sequence preceded by `delay` seconds without drive.
    pub fn delayed(&self, delay: f64) -> PulseSequence {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.start += delay;
        }
        let m = &mut out.markers;
        for v in [&mut m.prep_end, &mut m.encode_start, &mut m.encode_end, &mut m.work_start, &mut m.work_end] {
            *v += delay;
        }
        out.total_duration += delay;
        out
    }

    /// Step ③ window `[start, end]`.
    pub fn work_window(&self) -> (f64, f64) {
        (self.markers.work_start, self.markers.work_end)
    }
}

impl PulseSequence {
    fn combine(&self, t: f64, value: impl Fn(&PulseSegment) -> C64) -> DriveSample {
        let mut out = DriveSample::default();
        for s in &self.segments {
            let v = value(s);
            if v.norm_sqr() == 0.0 {
                continue;
            }
            match s.target {
                Port::Qubit => out.qubit += qubit_coefficient(v.norm(), v.arg(), s.carrier_detuning, t),
                Port::Cavity => out.cavity += cavity_coefficient(v, s.carrier_detuning, t),
            }
        }
        out
    }
}

impl Drive for PulseSequence {
    fn sample(&self, t: f64) -> DriveSample {
        self.combine(t, |s| s.value(t))
    }

    fn sample_left(&self, t: f64) -> DriveSample {
        self.combine(t, |s| s.value_left(t))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().flat_map(|s| [s.start, s.end()]).collect()
    }
}

/// Qubit rotation performed in step ① of the sequential protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepPulse {
    None,
    Pi,
    PiHalf,
    ThreePiHalf,
}

impl PrepPulse {
    /// Rotation angle in units of π.
    pub fn turns(self) -> f64 {
        match self {
            PrepPulse::None => 0.0,
            PrepPulse::Pi => 1.0,
            PrepPulse::PiHalf => 0.5,
            PrepPulse::ThreePiHalf => 1.5,
        }
    }
}

/// Drive amplitude calibration shared by the protocol builders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Peak Rabi frequency of the sequential Gaussian π-pulse, rad/s.
    pub pi_amplitude: Option<f64>,
    /// Excited population the calibrated π-pulse reaches from |g⟩. Used in
    /// place of `F_pi` when thermal preparations mix simulated branches.
    #[serde(default)]
    pub pi_fidelity: Option<f64>,
    /// Displacement area ∫ε_d dt per unit α_in, √photons.
    pub displacement_per_alpha: f64,
}

/// Default α_in → drive-area scale, √photons per unit α_in.
pub const DEFAULT_DISPLACEMENT_PER_ALPHA: f64 = 11.0;

impl Default for Calibration {
    fn default() -> Self {
        Calibration { pi_amplitude: None, pi_fidelity: None, displacement_per_alpha: DEFAULT_DISPLACEMENT_PER_ALPHA }
    }
}

impl Calibration {
    /// Runs the π-pulse calibration for the sequential Gaussian.
    pub fn calibrated(params: &DeviceParams) -> Result<Self> {
        let (pi, fidelity) = calibrate_pi(params, PulseShape::gaussian(SEQUENTIAL_SIGMA), 4.0 * SEQUENTIAL_SIGMA)?;
        Ok(Calibration { pi_amplitude: Some(pi), pi_fidelity: Some(fidelity), ..Default::default() })
    }

    pub fn with_displacement_per_alpha(mut self, scale: f64) -> Self {
        self.displacement_per_alpha = scale;
        self
    }

    fn pi(&self) -> Result<f64> {
        self.pi_amplitude.ok_or(Error::CalibrationRequired)
    }

    /// Peak ε_d of a cavity pulse of the given shape realizing `alpha_in`.
    pub fn cavity_peak(&self, alpha_in: f64, shape: PulseShape, duration: f64) -> f64 {
        alpha_in * self.displacement_per_alpha / shape.area(duration)
    }
}

fn check_alpha(alpha_in: f64) -> Result<()> {
    if !(alpha_in >= 0.0) || !alpha_in.is_finite() {
        return Err(Error::Parameter(format!("alpha_in must be finite and nonnegative, got {alpha_in}")));
    }
    Ok(())
}

fn qubit_amplitude(rabi: f64) -> C64 {
    C64::from_polar(rabi, QUBIT_PHASE)
}

/// Three back-to-back 50 ns Gaussian windows: preparation, displacement,
/// work-extraction π-pulse.
pub fn make_sequential_sequence(
    prep: PrepPulse,
    alpha_in: f64,
    params: &DeviceParams,
    calibration: &Calibration,
) -> Result<PulseSequence> {
    params.validate()?;
    check_alpha(alpha_in)?;
    let pi = calibration.pi()?;
    let shape = PulseShape::gaussian(SEQUENTIAL_SIGMA);
    let w = 4.0 * SEQUENTIAL_SIGMA;
    let eps = calibration.cavity_peak(alpha_in, shape, w);
    let segments = vec![
        PulseSegment {
            target: Port::Qubit,
            shape,
            start: 0.0,
            duration: w,
            amplitude: qubit_amplitude(pi * prep.turns()),
            carrier_detuning: 0.0,
        },
        PulseSegment {
            target: Port::Cavity,
            shape,
            start: w,
            duration: w,
            amplitude: C64::new(eps, 0.0),
            carrier_detuning: 0.0,
        },
        PulseSegment {
            target: Port::Qubit,
            shape,
            start: 2.0 * w,
            duration: w,
            amplitude: qubit_amplitude(pi),
            carrier_detuning: 0.0,
        },
    ];
    Ok(PulseSequence {
        segments,
        total_duration: 3.0 * w,
        markers: Markers {
            prep_start: 0.0,
            prep_end: w,
            encode_start: w,
            encode_end: 2.0 * w,
            work_start: 2.0 * w,
            work_end: 3.0 * w,
        },
    })
}

/// Prepends the sequential-protocol π-pulse window to `sequence`. Used by the
/// effective thermal bath, which fires this pulse with probability p.
pub fn with_pi_prefix(sequence: &PulseSequence, calibration: &Calibration) -> Result<PulseSequence> {
    let pi = calibration.pi()?;
    let w = 4.0 * SEQUENTIAL_SIGMA;
    let mut out = sequence.delayed(w);
    out.segments.insert(
        0,
        PulseSegment {
            target: Port::Qubit,
            shape: PulseShape::gaussian(SEQUENTIAL_SIGMA),
            start: 0.0,
            duration: w,
            amplitude: qubit_amplitude(pi),
            carrier_detuning: 0.0,
        },
    );
    Ok(out)
}

/// Rabi frequency of the continuous square pulse, rad/s.
pub fn continuous_rabi() -> f64 {
    2.0 * std::f64::consts::PI / CONTINUOUS_RABI_PERIOD
}

/// One square qubit pulse from t = 0 carrying steps ① and ③, with the cavity
/// displacement starting at `start_time` on top of it.
pub fn make_continuous_sequence(start_time: f64, alpha_in: f64, params: &DeviceParams, calibration: &Calibration) -> Result<PulseSequence> {
    params.validate()?;
    check_alpha(alpha_in)?;
    if !CONTINUOUS_STARTS.iter().any(|s| (s - start_time).abs() < 1e-12) {
        return Err(Error::Parameter(format!(
            "continuous start time must be 200, 300 or 400 ns, got {:.1} ns",
            start_time * 1e9
        )));
    }
    let omega = continuous_rabi();
    let work = std::f64::consts::PI / omega;
    let shape = PulseShape::gaussian(CONTINUOUS_SIGMA);
    let w = 4.0 * CONTINUOUS_SIGMA;
    let eps = calibration.cavity_peak(alpha_in, shape, w);
    let end = start_time + work;
    let segments = vec![
        PulseSegment {
            target: Port::Qubit,
            shape: PulseShape::Square,
            start: 0.0,
            duration: end,
            amplitude: qubit_amplitude(omega),
            carrier_detuning: 0.0,
        },
        PulseSegment {
            target: Port::Cavity,
            shape,
            start: start_time,
            duration: w,
            amplitude: C64::new(eps, 0.0),
            carrier_detuning: 0.0,
        },
    ];
    Ok(PulseSequence {
        segments,
        total_duration: end,
        markers: Markers {
            prep_start: 0.0,
            prep_end: start_time,
            encode_start: start_time,
            encode_end: start_time + w,
            work_start: start_time,
            work_end: end,
        },
    })
}

/// Fraction of runs receiving a π-pulse so that the qubit population matches
/// a Boltzmann weight at `t_target`, starting from equilibrium at `t0`.
pub fn thermal_prep_probability(t_target: f64, t0: f64, f_pi: f64, f_s: f64) -> Result<f64> {
    if !(t0 > 0.0) || !(f_pi > 0.0 && f_pi <= 1.0) {
        return Err(Error::Parameter(format!("need t0 > 0 and 0 < F_pi <= 1 (t0 = {t0}, F_pi = {f_pi})")));
    }
    if !(t_target >= t0) {
        return Err(Error::UnreachableTemperature { target: t_target, floor: t0 });
    }
    let pe0 = crate::thermo::boltzmann_population(t0, f_s);
    let pe = if t_target.is_infinite() { 0.5 } else { crate::thermo::boltzmann_population(t_target, f_s) };
    Ok(prep_probability(pe, pe0, f_pi))
}

/// π-pulse fraction taking the excited population from `pe0` to `pe_target`
/// with a pulse of fidelity `f_pi`, clamped to [0, 1].
pub fn prep_probability(pe_target: f64, pe0: f64, f_pi: f64) -> f64 {
    // equivalent to the closed form in e^{hf/kT}; this form stays finite at low T0
    let p = (pe_target - pe0) / (f_pi * (1.0 - 2.0 * pe0));
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        log::warn!("thermal prep probability {p} clamped to [0, 1]");
    }
    p.clamp(0.0, 1.0)
}

/// Golden-section search for the peak amplitude of a pulse of the given
/// shape that maximizes the excited population reached from |g, 0⟩.
pub fn calibrate_pi_amplitude(params: &DeviceParams, shape: PulseShape, duration: f64) -> Result<f64> {
    calibrate_pi(params, shape, duration).map(|(amp, _)| amp)
}

/// Calibrated amplitude and the excited population it reaches.
fn calibrate_pi(params: &DeviceParams, shape: PulseShape, duration: f64) -> Result<(f64, f64)> {
    params.validate()?;
    let probe = PulseSegment {
        target: Port::Qubit,
        shape,
        start: 0.0,
        duration,
        amplitude: C64::new(1.0, 0.0),
        carrier_detuning: 0.0,
    };
    probe.validate()?;
    let qubit_only = params.clone().with_n_trunc(1);
    let rho0 = DensityMatrix::basis_state(qubit_only.space(), 0, 0)?;
    let opts = EvolveOptions { tol: 1e-10, check_positivity: false, ..Default::default() };
    let population = |amp: f64| -> Result<f64> {
        let seq = PulseSequence {
            segments: vec![PulseSegment { amplitude: qubit_amplitude(amp), ..probe.clone() }],
            total_duration: duration,
            markers: Markers::default(),
        };
        let rho = propagate(&rho0, &qubit_only, &seq, 0.0, duration, &opts)?;
        let q = partial_trace(&rho, Subsystem::Qubit)?;
        Ok(q.population(1))
    };

    let ideal = std::f64::consts::PI / shape.area(duration);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.7 * ideal, 1.3 * ideal);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (population(c)?, population(d)?);
    while (b - a) > 1e-7 * ideal {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = population(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = population(d)?;
        }
    }
    let best = (a + b) / 2.0;
    let reached = population(best)?;
    if reached < 0.9 {
        return Err(Error::CalibrationFailed(format!("best excited population {reached:.4} is below 0.9")));
    }
    log::info!("pi amplitude {best:.6e} rad/s reaches p_e = {reached:.6}");
    Ok((best, reached))
}

/// Cavity state at the end of the sequential displacement pulse, starting
/// from |g⟩ ⊗ thermal cavity.
pub fn encoded_cavity_state(alpha_in: f64, params: &DeviceParams, calibration: &Calibration) -> Result<DensityMatrix> {
    encoded_cavity_state_with(alpha_in, SEQUENTIAL_SIGMA, params, calibration)
}

/// Same as [`encoded_cavity_state`] for a displacement Gaussian of width `sigma`.
pub fn encoded_cavity_state_with(
    alpha_in: f64,
    sigma: f64,
    params: &DeviceParams,
    calibration: &Calibration,
) -> Result<DensityMatrix> {
    check_alpha(alpha_in)?;
    let shape = PulseShape::gaussian(sigma);
    let w = 4.0 * sigma;
    let seq = PulseSequence {
        segments: vec![PulseSegment {
            target: Port::Cavity,
            shape,
            start: 0.0,
            duration: w,
            amplitude: C64::new(calibration.cavity_peak(alpha_in, shape, w), 0.0),
            carrier_detuning: 0.0,
        }],
        total_duration: w,
        markers: Markers::default(),
    };
    let mut cold = params.clone();
    cold.p_e0 = 0.0;
    let rho0 = equilibrium_state(&cold, DEMON_BATH_TEMPERATURE)?;
    let rho = propagate(&rho0, params, &seq, 0.0, w, &EvolveOptions::default())?;
    partial_trace(&rho, Subsystem::Cavity)
}

/// Mean photon number after the step-② displacement.
pub fn alpha_to_nbar(alpha_in: f64, params: &DeviceParams, calibration: &Calibration) -> Result<f64> {
    let cav = encoded_cavity_state(alpha_in, params, calibration)?;
    let nbar = cav.expect(&number_operator(params.n_trunc)?)?.re;
    if nbar > params.n_trunc as f64 / 2.0 {
        return Err(Error::TruncationUnsafe(format!(
            "mean photon number {nbar:.2} exceeds half the truncation ({})",
            params.n_trunc
        )));
    }
    Ok(nbar)
}

/// α_in whose displacement pulse of width `sigma` encodes `nbar` photons
/// from |g⟩, by bisection.
pub fn alpha_for_nbar(nbar: f64, sigma: f64, params: &DeviceParams, calibration: &Calibration) -> Result<f64> {
    if !(nbar >= 0.0) || nbar > params.n_trunc as f64 / 2.0 {
        return Err(Error::TruncationUnsafe(format!(
            "target of {nbar} photons needs a truncation above {}",
            params.n_trunc
        )));
    }
    let photons = |alpha: f64| -> Result<f64> {
        let cav = encoded_cavity_state_with(alpha, sigma, params, calibration)?;
        Ok(cav.expect(&number_operator(params.n_trunc)?)?.re)
    };
    let mut hi = nbar.sqrt().max(0.1) / calibration.displacement_per_alpha;
    while photons(hi)? < nbar {
        hi *= 2.0;
        if hi * calibration.displacement_per_alpha > 4.0 * params.n_trunc as f64 {
            return Err(Error::CalibrationFailed(format!("no α_in reaches {nbar} photons")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-7 * hi {
        let mid = 0.5 * (lo + hi);
        if photons(mid)? < nbar {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
