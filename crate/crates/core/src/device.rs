// SPDX-License-Identifier: Apache-2.0

//! Physical model of the qubit–cavity device.
//!
//! Frequencies are stored in Hz as quoted for the hardware and converted to
//! angular units (×2π) only when the generator is assembled. `kappa_D` follows
//! the same rule: the stored value is κ_D/2π, so the Lindblad rate is
//! `2π·kappa_D`. `gamma_1` and `gamma_phi` are plain inverse times.
//!
//! The rotating frame turns at the bare qubit frequency `f_S` and the bare
//! cavity frequency `f_D`. A drive whose carrier is offset from those
//! frequencies enters through a linear phase ramp on its envelope.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    fock_annihilation, sigma_minus, sigma_plus, sigma_z, CMatrix, Operator, Space, C64,
};

pub const TWO_PI: f64 = 2.0 * PI;

/// Constants of the experiment. JSON field names are fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Qubit frequency, Hz.
    #[serde(rename = "f_S")]
    pub f_s: f64,
    /// Cavity frequency, Hz.
    #[serde(rename = "f_D")]
    pub f_d: f64,
    /// Dispersive shift, Hz.
    pub chi: f64,
    /// Second-order dispersive correction, Hz.
    pub chi2: f64,
    /// Cavity self-Kerr, Hz.
    #[serde(rename = "kerr_K")]
    pub kerr_k: f64,
    /// Cavity linewidth κ_D/2π, Hz.
    #[serde(rename = "kappa_D")]
    pub kappa_d: f64,
    /// Qubit energy relaxation rate, 1/s.
    pub gamma_1: f64,
    /// Qubit pure dephasing rate, 1/s.
    pub gamma_phi: f64,
    /// Equilibrium excited-state population.
    pub p_e0: f64,
    /// Emission rate into the drive port b, 1/s.
    pub gamma_b: f64,
    /// π-pulse fidelity used in the thermal-preparation algebra.
    #[serde(rename = "F_pi")]
    pub f_pi: f64,
    /// Highest retained cavity Fock level.
    pub n_trunc: usize,
}

impl Default for DeviceParams {
    fn default() -> Self {
        let gamma_1 = 1.0 / 2.2e-6;
        DeviceParams {
            f_s: 7.088e9,
            f_d: 7.913e9,
            chi: 33.8e6,
            chi2: 0.9e6,
            kerr_k: 0.7e6,
            kappa_d: 0.77e6,
            gamma_1,
            gamma_phi: 85e3,
            p_e0: 0.036,
            gamma_b: gamma_1,
            f_pi: 0.92,
            n_trunc: 45,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("f_S", self.f_s),
            ("f_D", self.f_d),
            ("kappa_D", self.kappa_d),
            ("gamma_1", self.gamma_1),
            ("gamma_phi", self.gamma_phi),
            ("gamma_b", self.gamma_b),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        for (name, v) in [("chi", self.chi), ("chi2", self.chi2), ("kerr_K", self.kerr_k)] {
            if !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_e0) {
            return Err(Error::Parameter(format!("p_e0 = {} outside [0, 1]", self.p_e0)));
        }
        if !(self.f_pi > 0.0 && self.f_pi <= 1.0) {
            return Err(Error::Parameter(format!("F_pi = {} outside (0, 1]", self.f_pi)));
        }
        if self.gamma_b > self.gamma_1 * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "gamma_b = {} exceeds gamma_1 = {}",
                self.gamma_b, self.gamma_1
            )));
        }
        if self.n_trunc < 1 {
            return Err(Error::InvalidDimension("n_trunc must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: DeviceParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("DeviceParams serializes")
    }

    pub fn with_n_trunc(mut self, n_trunc: usize) -> Self {
        self.n_trunc = n_trunc;
        self
    }

    /// Same device with every dissipative channel switched off.
    pub fn without_decoherence(mut self) -> Self {
        self.kappa_d = 0.0;
        self.gamma_1 = 0.0;
        self.gamma_phi = 0.0;
        self.gamma_b = 0.0;
        self
    }

    pub fn space(&self) -> Space {
        Space::joint(self.n_trunc)
    }

    /// Cavity energy decay rate, 1/s.
    pub fn kappa_rate(&self) -> f64 {
        TWO_PI * self.kappa_d
    }

    pub fn gamma_down(&self) -> f64 {
        (1.0 - self.p_e0) * self.gamma_1
    }

    pub fn gamma_up(&self) -> f64 {
        self.p_e0 * self.gamma_1
    }

    /// Diagonal of the undriven frame Hamiltonian for `|q, n⟩`, rad/s.
    pub fn frame_energy(&self, q: usize, n: usize) -> f64 {
        let n = n as f64;
        let e = q as f64;
        TWO_PI * (-self.chi * n * e - self.kerr_k * n * n + self.chi2 * n * n * e)
    }

    /// Qubit transition frequency offset from `f_S` when the cavity holds `n` photons, Hz.
    pub fn qubit_offset_at_fock(&self, n: usize) -> f64 {
        (self.frame_energy(1, n) - self.frame_energy(0, n)) / TWO_PI
    }
}

/// Drive coefficients at one instant, in the rotating frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriveSample {
    /// Coefficient of `σ₊` (rad/s); the `σ₋` term is its conjugate.
    pub qubit: C64,
    /// Coefficient of `d†` (√photons/s); the `d` term is its conjugate.
    pub cavity: C64,
}

impl DriveSample {
    /// Instantaneous Rabi frequency Ω(t), rad/s.
    pub fn rabi(&self) -> f64 {
        2.0 * self.qubit.norm()
    }
}

/// Time-dependent drive on the qubit and cavity ports.
pub trait Drive: Sync {
    fn sample(&self, t: f64) -> DriveSample;

    /// Limit approached from earlier times. Differs from [`Drive::sample`]
    /// only at breakpoints.
    fn sample_left(&self, t: f64) -> DriveSample {
        self.sample(t)
    }

    /// Times where an envelope may be discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Qubit drive `(Ω/2)(σx cos φ + σy sin φ)` with a carrier offset `detuning`
/// (Hz) from `f_S`, expressed as the `σ₊` coefficient.
pub fn qubit_coefficient(rabi: f64, phase: f64, detuning: f64, t: f64) -> C64 {
    C64::from_polar(0.5 * rabi, -(phase + TWO_PI * detuning * t))
}

/// Cavity drive `ε d† + ε* d` with carrier offset `detuning` (Hz) from `f_D`.
pub fn cavity_coefficient(eps: C64, detuning: f64, t: f64) -> C64 {
    eps * C64::from_polar(1.0, -TWO_PI * detuning * t)
}

/// Constant-envelope drive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveEnvelope {
    /// Ω, rad/s.
    pub qubit_amp: f64,
    pub qubit_phase: f64,
    /// ε_d, √photons/s.
    pub cavity_amp: C64,
    /// Qubit carrier offset from `f_S`, Hz.
    pub detuning_s: f64,
    /// Cavity carrier offset from `f_D`, Hz.
    pub detuning_d: f64,
}

impl DriveEnvelope {
    pub fn off() -> Self {
        DriveEnvelope::default()
    }
}

impl Drive for DriveEnvelope {
    fn sample(&self, t: f64) -> DriveSample {
        DriveSample {
            qubit: qubit_coefficient(self.qubit_amp, self.qubit_phase, self.detuning_s, t),
            cavity: cavity_coefficient(self.cavity_amp, self.detuning_d, t),
        }
    }
}

/// Joint-space operators shared by the Hamiltonian and the dissipators.
pub(crate) struct JointOps {
    pub d: CMatrix,
    pub sigma_minus: CMatrix,
    pub sigma_plus: CMatrix,
    pub sigma_z: CMatrix,
}

impl JointOps {
    pub fn new(n_trunc: usize) -> Result<Self> {
        let d = fock_annihilation(n_trunc)?.on_joint_from_cavity()?;
        Ok(JointOps {
            d: d.into_matrix(),
            sigma_minus: sigma_minus().on_joint_from_qubit(n_trunc)?.into_matrix(),
            sigma_plus: sigma_plus().on_joint_from_qubit(n_trunc)?.into_matrix(),
            sigma_z: sigma_z().on_joint_from_qubit(n_trunc)?.into_matrix(),
        })
    }
}

/// Undriven frame Hamiltonian as a diagonal, rad/s.
pub(crate) fn static_diagonal(params: &DeviceParams) -> Vec<f64> {
    let space = params.space();
    let mut diag = vec![0.0; space.dim()];
    for q in 0..2 {
        for n in 0..space.cavity {
            diag[space.index(q, n)] = params.frame_energy(q, n);
        }
    }
    diag
}

/// Frame Hamiltonian `H/ħ` at time `t`, rad/s.
pub fn build_hamiltonian(params: &DeviceParams, drive: &dyn Drive, t: f64) -> Result<Operator> {
    params.validate()?;
    let ops = JointOps::new(params.n_trunc)?;
    let space = params.space();
    let mut h = CMatrix::zeros(space.dim(), space.dim());
    for (k, e) in static_diagonal(params).into_iter().enumerate() {
        h[(k, k)] = C64::new(e, 0.0);
    }
    let s = drive.sample(t);
    h += &ops.sigma_plus * s.qubit + &ops.sigma_minus * s.qubit.conj();
    h += ops.d.adjoint() * s.cavity + &ops.d * s.cavity.conj();
    Operator::new(space, h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    CavityDecay,
    QubitRelaxation,
    QubitExcitation,
    QubitDephasing,
}

/// One Lindblad term `rate · L(jump)`.
#[derive(Clone, Debug)]
pub struct CollapseChannel {
    pub channel: Channel,
    pub rate: f64,
    pub jump: Operator,
}

/// The four dissipators of the forward master equation, in fixed order:
/// cavity decay, qubit relaxation, qubit excitation, qubit dephasing.
pub fn collapse_operators(params: &DeviceParams) -> Result<Vec<CollapseChannel>> {
    params.validate()?;
    let n = params.n_trunc;
    let ops = JointOps::new(n)?;
    let space = params.space();
    Ok(vec![
        CollapseChannel { channel: Channel::CavityDecay, rate: params.kappa_rate(), jump: Operator::new(space, ops.d)? },
        CollapseChannel {
            channel: Channel::QubitRelaxation,
            rate: params.gamma_down(),
            jump: Operator::new(space, ops.sigma_minus)?,
        },
        CollapseChannel {
            channel: Channel::QubitExcitation,
            rate: params.gamma_up(),
            jump: Operator::new(space, ops.sigma_plus)?,
        },
        CollapseChannel {
            channel: Channel::QubitDephasing,
            rate: params.gamma_phi / 2.0,
            jump: Operator::new(space, ops.sigma_z)?,
        },
    ])
}

/// Weak-drive cavity response used for Stark-shift and measurement-induced
/// dephasing spectroscopy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StarkResponse {
    pub t: Vec<f64>,
    pub alpha_g: Vec<C64>,
    pub alpha_e: Vec<C64>,
    /// Hz.
    pub f_stark: Vec<f64>,
    /// 1/s.
    pub gamma_d: Vec<f64>,
}

impl StarkResponse {
    pub fn last_gamma_d(&self) -> f64 {
        self.gamma_d.last().copied().unwrap_or(0.0)
    }

    pub fn last_f_stark(&self) -> f64 {
        self.f_stark.last().copied().unwrap_or(0.0)
    }
}

const WEAK_DRIVE_BOUND: f64 = 2.0;

/// Integrates the two coherent-amplitude equations of a cavity driven at
/// `f_D + delta` with constant amplitude `eps_d`, starting from vacuum at
/// `t_grid[0]`.
pub fn stark_dephasing_response(
    params: &DeviceParams,
    delta: f64,
    eps_d: C64,
    t_grid: &[f64],
) -> Result<StarkResponse> {
    params.validate()?;
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("time grid must be strictly increasing".into()));
    }
    let half_kappa = params.kappa_rate() / 2.0;
    let chi_eff = params.chi - params.chi2;
    let lambda_g = C64::new(-half_kappa, TWO_PI * delta);
    let lambda_e = C64::new(-half_kappa, TWO_PI * (delta + chi_eff));
    let rhs = |lambda: C64, a: C64| lambda * a + eps_d;
    // RK4 with substeps bounded by the fastest rotation
    let fastest = lambda_e.norm().max(lambda_g.norm()).max(1.0);
    let max_step = 0.05 / fastest;

    let mut out = StarkResponse::default();
    let (mut ag, mut ae) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    let record = |t: f64, ag: C64, ae: C64, out: &mut StarkResponse| -> Result<()> {
        if ag.norm() > WEAK_DRIVE_BOUND || ae.norm() > WEAK_DRIVE_BOUND {
            return Err(Error::WeakDriveViolated(ag.norm().max(ae.norm())));
        }
        let prod = ag.conj() * ae;
        out.t.push(t);
        out.alpha_g.push(ag);
        out.alpha_e.push(ae);
        out.f_stark.push(chi_eff * prod.re);
        out.gamma_d.push(chi_eff * prod.im);
        Ok(())
    };
    let Some(&t0) = t_grid.first() else {
        return Ok(out);
    };
    record(t0, ag, ae, &mut out)?;
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / max_step).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            for (a, lambda) in [(&mut ag, lambda_g), (&mut ae, lambda_e)] {
                let k1 = rhs(lambda, *a);
                let k2 = rhs(lambda, *a + k1 * (h / 2.0));
                let k3 = rhs(lambda, *a + k2 * (h / 2.0));
                let k4 = rhs(lambda, *a + k3 * h);
                *a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
        }
        record(w[1], ag, ae, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small() -> DeviceParams {
        DeviceParams::default().with_n_trunc(6)
    }

    #[test]
    fn default_params_are_valid() {
        DeviceParams::default().validate().unwrap();
        let p = DeviceParams::default();
        assert_abs_diff_eq!(p.gamma_1, 4.545e5, epsilon = 1e2);
        assert_abs_diff_eq!(p.gamma_down(), 0.964 * p.gamma_1, epsilon = 1e-9);
        assert_abs_diff_eq!(p.gamma_up(), 0.036 * p.gamma_1, epsilon = 1e-9);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = small();
        p.gamma_b = 2.0 * p.gamma_1;
        assert!(p.validate().is_err());
        let mut p = small();
        p.p_e0 = 1.5;
        assert!(p.validate().is_err());
        let mut p = small();
        p.f_pi = 0.0;
        assert!(p.validate().is_err());
        let mut p = small();
        p.gamma_phi = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let p = small();
        let back = DeviceParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
        let text = p.to_json().replacen('{', "{\n  \"bogus\": 1.0,", 1);
        assert!(DeviceParams::from_json(&text).is_err());
        let v: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
        for key in ["f_S", "f_D", "chi", "chi2", "kerr_K", "kappa_D", "gamma_1", "gamma_phi", "p_e0", "gamma_b", "F_pi", "n_trunc"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn hamiltonian_diagonal_values() {
        let p = small();
        let h = build_hamiltonian(&p, &DriveEnvelope::off(), 0.0).unwrap();
        let s = p.space();
        let m = h.matrix();
        assert_eq!(m[(s.index(0, 0), s.index(0, 0))].norm(), 0.0);
        assert_abs_diff_eq!(m[(s.index(0, 1), s.index(0, 1))].re / TWO_PI, -0.7e6, epsilon = 1e-6);
        assert_abs_diff_eq!(m[(s.index(1, 1), s.index(1, 1))].re / TWO_PI, -33.6e6, epsilon = 1e-6);
    }

    #[test]
    fn qubit_splitting_at_fock_n() {
        let p = small();
        for n in 0..=p.n_trunc {
            let nf = n as f64;
            assert_abs_diff_eq!(p.qubit_offset_at_fock(n), -nf * (p.chi - nf * p.chi2), epsilon = 1e-3);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_and_commutes_without_drive() {
        let p = small();
        let drive = DriveEnvelope {
            qubit_amp: 1.5e7,
            qubit_phase: 0.3,
            cavity_amp: C64::new(2e7, -1e7),
            detuning_s: 1e6,
            detuning_d: -2e6,
        };
        for t in [0.0, 13e-9, 250e-9] {
            let h = build_hamiltonian(&p, &drive, t).unwrap();
            let scale = h.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(h.hermiticity_defect() < 1e-12 * scale);
        }
        let h = build_hamiltonian(&p, &DriveEnvelope::off(), 0.0).unwrap();
        let n = crate::operators::number_operator(p.n_trunc).unwrap().on_joint_from_cavity().unwrap();
        let e = crate::operators::excited_projector().on_joint_from_qubit(p.n_trunc).unwrap();
        for op in [n, e] {
            let c = h.mul(&op).unwrap().sub(&op.mul(&h).unwrap()).unwrap();
            assert!(c.matrix().iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn collapse_channels() {
        let p = small();
        let ch = collapse_operators(&p).unwrap();
        assert_eq!(ch.len(), 4);
        assert_abs_diff_eq!(ch[0].rate, TWO_PI * 0.77e6, epsilon = 1e-6);
        assert_abs_diff_eq!(ch[1].rate, 0.964 * p.gamma_1, epsilon = 1e-6);
        assert_abs_diff_eq!(ch[2].rate, 0.036 * p.gamma_1, epsilon = 1e-6);
        assert_abs_diff_eq!(ch[3].rate, 42.5e3, epsilon = 1e-9);

        let mut cold = small();
        cold.p_e0 = 0.0;
        let ch = collapse_operators(&cold).unwrap();
        assert_eq!(ch[2].rate, 0.0);
        assert_eq!(ch.len(), 4);
    }

    #[test]
    fn stark_zero_drive() {
        let p = small();
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 10e-9).collect();
        let r = stark_dephasing_response(&p, 0.0, C64::new(0.0, 0.0), &grid).unwrap();
        assert!(r.alpha_g.iter().chain(&r.alpha_e).all(|a| a.norm() == 0.0));
        assert!(r.f_stark.iter().chain(&r.gamma_d).all(|&x| x == 0.0));
    }

    #[test]
    fn stark_steady_state_matches_fixed_point() {
        let p = small();
        let half_kappa = p.kappa_rate() / 2.0;
        let eps = C64::new(0.5 * half_kappa, 0.0);
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 200e-9).collect();
        let r = stark_dephasing_response(&p, 0.0, eps, &grid).unwrap();
        let ag = *r.alpha_g.last().unwrap();
        assert!((ag - eps / half_kappa).norm() < 1e-8);
    }

    #[test]
    fn stark_lorentzian_identity() {
        let p = small();
        let half_kappa = p.kappa_rate() / 2.0;
        let eps = C64::new(0.4 * half_kappa, 0.0);
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 * 200e-9).collect();
        for delta in [-3e6, -0.5e6, 0.0, 0.8e6, 5e6] {
            let r = stark_dephasing_response(&p, delta, eps, &grid).unwrap();
            let ag = r.alpha_g.last().unwrap().norm_sqr();
            let expected = eps.norm_sqr() / (half_kappa.powi(2) + (TWO_PI * delta).powi(2));
            assert_abs_diff_eq!(ag, expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn stark_weak_drive_violation() {
        let p = small();
        let eps = C64::new(10.0 * p.kappa_rate(), 0.0);
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 100e-9).collect();
        assert!(matches!(
            stark_dephasing_response(&p, 0.0, eps, &grid),
            Err(Error::WeakDriveViolated(_))
        ));
    }
}
