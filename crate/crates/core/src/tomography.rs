// SPDX-License-Identifier: Apache-2.0

//! Generalized Husimi tomography of the demon cavity: probe sequence, effect
//! operators by backward propagation, and least-squares MaxLike
//! reconstruction.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::dynamics::{propagate_effect_matrix, AdjointOptions, EffectOperator};
use crate::error::{Error, Result};
use crate::operators::{
    hermitian_eigen, project_to_density_matrix, reassemble, trace_product, von_neumann_entropy, CMatrix, DensityMatrix,
    Operator, Space, C64,
};
use crate::sequences::{Markers, Port, PulseSegment, PulseSequence, PulseShape, QUBIT_PHASE};

/// Half width of the default β square, in √photons.
pub const GRID_HALF_WIDTH: f64 = 5.95;

/// Lowest and highest reconstruction truncation on the entropy plateau.
pub const RECON_PLATEAU: (usize, usize) = (13, 21);

/// One measured point: excited probability after probing Fock level `n`
/// at displacement β.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub beta_re: f64,
    pub beta_im: f64,
    pub n: usize,
    pub p_e: f64,
}

/// Displacements × Fock levels, with optional measured probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyGrid {
    pub beta_grid: Vec<C64>,
    pub fock_indices: Vec<usize>,
    /// `p_e[i_n * beta_grid.len() + i_beta]`; empty for a bare layout.
    pub p_e: Vec<f64>,
}

const P_TOL: f64 = 1e-9;

impl TomographyGrid {
    /// `points × points` square over `[−half_width, half_width]²` and Fock
    /// levels `0..=n_max`.
    pub fn square(points: usize, half_width: f64, n_max: usize) -> Result<Self> {
        if points == 0 || !(half_width >= 0.0) {
            return Err(Error::Parameter(format!("bad grid: {points} points, half width {half_width}")));
        }
        let axis: Vec<f64> = if points == 1 {
            vec![0.0]
        } else {
            (0..points).map(|k| -half_width + 2.0 * half_width * k as f64 / (points - 1) as f64).collect()
        };
        let beta_grid = axis.iter().flat_map(|&im| axis.iter().map(move |&re| C64::new(re, im))).collect();
        Ok(TomographyGrid { beta_grid, fock_indices: (0..=n_max).collect(), p_e: Vec::new() })
    }

    /// 31×31 grid, n ≤ 5.
    pub fn full() -> Self {
        Self::square(31, GRID_HALF_WIDTH, 5).expect("static grid")
    }

    /// 15×15 grid, n ≤ 3.
    pub fn desk() -> Self {
        Self::square(15, GRID_HALF_WIDTH, 3).expect("static grid")
    }

    pub fn len(&self) -> usize {
        self.beta_grid.len() * self.fock_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_data(&self) -> bool {
        !self.p_e.is_empty()
    }

    /// Points with |β| ≤ `beta_max`, data included.
    pub fn restricted(&self, beta_max: f64) -> TomographyGrid {
        let keep: Vec<usize> = (0..self.beta_grid.len()).filter(|&b| self.beta_grid[b].norm() <= beta_max + 1e-12).collect();
        let nb = self.beta_grid.len();
        let p_e = if self.has_data() {
            (0..self.fock_indices.len()).flat_map(|i| keep.iter().map(move |&b| i * nb + b)).map(|k| self.p_e[k]).collect()
        } else {
            Vec::new()
        };
        TomographyGrid {
            beta_grid: keep.iter().map(|&b| self.beta_grid[b]).collect(),
            fock_indices: self.fock_indices.clone(),
            p_e,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.has_data() && self.p_e.len() != self.len() {
            return Err(Error::Shape(format!("{} probabilities for {} grid points", self.p_e.len(), self.len())));
        }
        if let Some(p) = self.p_e.iter().find(|p| !(**p >= -P_TOL && **p <= 1.0 + P_TOL)) {
            return Err(Error::Validation(format!("probability {p} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn records(&self) -> Vec<TomographyRecord> {
        let nb = self.beta_grid.len();
        self.fock_indices
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| {
                self.beta_grid.iter().enumerate().map(move |(b, beta)| TomographyRecord {
                    beta_re: beta.re,
                    beta_im: beta.im,
                    n,
                    p_e: if self.p_e.is_empty() { f64::NAN } else { self.p_e[i * nb + b] },
                })
            })
            .collect()
    }

    /// Rebuilds a grid from records covering every (n, β) pair once.
    pub fn from_records(records: &[TomographyRecord]) -> Result<Self> {
        let mut beta_grid: Vec<C64> = Vec::new();
        let mut fock_indices: Vec<usize> = Vec::new();
        for r in records {
            let beta = C64::new(r.beta_re, r.beta_im);
            if !beta_grid.iter().any(|b| (b - beta).norm() < 1e-12) {
                beta_grid.push(beta);
            }
            if !fock_indices.contains(&r.n) {
                fock_indices.push(r.n);
            }
        }
        fock_indices.sort_unstable();
        let nb = beta_grid.len();
        let mut p_e = vec![f64::NAN; nb * fock_indices.len()];
        for r in records {
            let i = fock_indices.binary_search(&r.n).expect("collected above");
            let b = beta_grid.iter().position(|b| (b - C64::new(r.beta_re, r.beta_im)).norm() < 1e-12).expect("collected above");
            if !p_e[i * nb + b].is_nan() {
                return Err(Error::Validation(format!("duplicate record n = {} β = {}", r.n, beta_grid[b])));
            }
            p_e[i * nb + b] = r.p_e;
        }
        if p_e.iter().any(|p| p.is_nan()) {
            return Err(Error::Validation("records do not cover every (n, β) pair".into()));
        }
        let grid = TomographyGrid { beta_grid, fock_indices, p_e };
        grid.validate()?;
        Ok(grid)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.records())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<TomographyRecord> = serde_json::from_str(text)?;
        Self::from_records(&records)
    }
}

/// `⟨m|D(β)|n⟩` for `m = 0..dim`.
fn displaced_fock(n: usize, beta: C64, dim: usize) -> Vec<C64> {
    let x = beta.norm_sqr();
    let gauss = (-0.5 * x).exp();
    let lf = |k: usize| libm::lgamma(k as f64 + 1.0);
    (0..dim)
        .map(|m| {
            let (lo, hi) = (m.min(n), m.max(n));
            let k = (hi - lo) as u32;
            let base = if m >= n { beta } else { -beta.conj() };
            let ratio = (0.5 * (lf(lo) - lf(hi))).exp();
            base.powu(k) * (ratio * gauss * laguerre(lo, k as f64, x))
        })
        .collect()
}

/// Generalized Laguerre polynomial `L_k^{(a)}(x)` by the three-term recurrence.
fn laguerre(k: usize, a: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 + a - x);
    if k == 0 {
        return prev;
    }
    for j in 1..k {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + a - x) * cur - (j + a) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `(1/π)⟨n|D(β)†ρ D(β)|n⟩` for a cavity state.
pub fn husimi_q(rho_d: &DensityMatrix, n: usize, beta: C64) -> Result<f64> {
    let space = rho_d.space();
    if space.qubit != 1 {
        return Err(Error::Shape("husimi_q needs a cavity density matrix".into()));
    }
    let n_trunc = space.n_trunc() as f64;
    let v = displaced_fock(n, beta, space.cavity);
    if n as f64 > n_trunc - beta.norm_sqr() - 3.0 {
        let lost = 1.0 - v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        log::warn!("Q_{n}({beta}) near the truncation at {n_trunc}: displaced probe loses {lost:.2e} of its weight");
    }
    let m = rho_d.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for (i, vi) in v.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            acc += vi.conj() * m[(i, j)] * vj;
        }
    }
    Ok(acc.re.max(0.0) / std::f64::consts::PI)
}

/// Timing of the probe: a short displacement, then a long number-selective
/// π-pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeSettings {
    /// Window of the ±2σ Gaussian displacement, s.
    pub displacement_duration: f64,
    /// Window of the ±2σ Gaussian conditional π-pulse, s.
    pub conditional_duration: f64,
    pub adjoint: AdjointOptions,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings { displacement_duration: 40e-9, conditional_duration: 400e-9, adjoint: AdjointOptions::default() }
    }
}

/// Probe sequence for Fock level `n` at displacement β: the cavity is
/// displaced by −β, then the qubit is flipped at its frequency for `n`
/// photons.
pub fn probe_sequence(n: usize, beta: C64, params: &DeviceParams, probe: &ProbeSettings) -> Result<PulseSequence> {
    let (d, c) = (probe.displacement_duration, probe.conditional_duration);
    if !(d > 0.0 && c > 0.0) {
        return Err(Error::Parameter("probe pulse durations must be positive".into()));
    }
    let disp = PulseShape::gaussian(d / 4.0);
    let cond = PulseShape::gaussian(c / 4.0);
    // H = ε d† + ε* d displaces by −i∫ε dt
    let eps = C64::new(0.0, -1.0) * beta / disp.area(d);
    let rabi = std::f64::consts::PI / cond.area(c);
    Ok(PulseSequence {
        segments: vec![
            PulseSegment { target: Port::Cavity, shape: disp, start: 0.0, duration: d, amplitude: eps, carrier_detuning: 0.0 },
            PulseSegment {
                target: Port::Qubit,
                shape: cond,
                start: d,
                duration: c,
                amplitude: C64::from_polar(rabi, QUBIT_PHASE),
                carrier_detuning: params.qubit_offset_at_fock(n),
            },
        ],
        total_duration: d + c,
        markers: Markers::default(),
    })
}

/// MaxLike settings and the probe timing used to build effects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    pub n_trunc_recon: usize,
    /// Only displacements with |β| ≤ beta_max enter the fit.
    pub beta_max: f64,
    /// Ground weight of the qubit state assumed during the fit.
    pub p_g: f64,
    /// First trial step in units of 1/L, L the gradient Lipschitz constant.
    pub step_size: f64,
    pub max_iters: usize,
    /// Bound on the projected-gradient norm at convergence.
    pub convergence_tol: f64,
    pub probe: ProbeSettings,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            n_trunc_recon: 15,
            beta_max: 3.0,
            p_g: 0.97,
            step_size: 1.0,
            max_iters: 20_000,
            convergence_tol: 1e-6,
            probe: ProbeSettings::default(),
        }
    }
}

impl ReconstructionConfig {
    /// Reduced truncation for quick runs.
    pub fn desk() -> Self {
        ReconstructionConfig { n_trunc_recon: 10, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_g) {
            return Err(Error::Parameter(format!("p_g = {} outside [0, 1]", self.p_g)));
        }
        if !(self.step_size > 0.0) || !(self.convergence_tol > 0.0) || !(self.beta_max >= 0.0) {
            return Err(Error::Parameter("step size, tolerance and beta_max must be positive".into()));
        }
        if self.n_trunc_recon < RECON_PLATEAU.0 || self.n_trunc_recon > RECON_PLATEAU.1 {
            log::warn!(
                "n_trunc_recon = {} is outside the {}..={} plateau",
                self.n_trunc_recon,
                RECON_PLATEAU.0,
                RECON_PLATEAU.1
            );
        }
        Ok(())
    }
}

/// Effects `E_{n,β}(0)` in grid order `i_n * beta_grid.len() + i_beta`.
#[derive(Clone, Debug)]
pub struct EffectSet {
    pub beta_grid: Vec<C64>,
    pub fock_indices: Vec<usize>,
    pub effects: Vec<EffectOperator>,
}

impl EffectSet {
    pub fn space(&self) -> Option<Space> {
        self.effects.first().map(|e| e.op.space())
    }

    fn index_of(&self, n: usize, beta: C64) -> Option<usize> {
        let i = self.fock_indices.iter().position(|&k| k == n)?;
        let b = self.beta_grid.iter().position(|b| (b - beta).norm() < 1e-9)?;
        Some(i * self.beta_grid.len() + b)
    }

    /// Same effects relabeled for the β grid rotated by `theta`, conjugated by
    /// `e^{iθ n̂}`.
    pub fn rotated(&self, theta: f64) -> Result<EffectSet> {
        let Some(space) = self.space() else { return Ok(self.clone()) };
        let phase: Vec<C64> = (0..space.dim()).map(|k| C64::from_polar(1.0, theta * (k % space.cavity) as f64)).collect();
        let rot = C64::from_polar(1.0, theta);
        let effects = self
            .effects
            .iter()
            .map(|e| {
                let m = CMatrix::from_fn(space.dim(), space.dim(), |i, j| phase[i] * e.op.matrix()[(i, j)] * phase[j].conj());
                Ok(EffectOperator::new(Operator::new(space, m)?, e.n, e.beta * rot))
            })
            .collect::<Result<_>>()?;
        Ok(EffectSet {
            beta_grid: self.beta_grid.iter().map(|b| b * rot).collect(),
            fock_indices: self.fock_indices.clone(),
            effects,
        })
    }
}

/// Backward-propagates `I ⊗ |e⟩⟨e|` through the probe sequence of every
/// (n, β) with |β| ≤ `config.beta_max`.
pub fn build_effects(grid: &TomographyGrid, params: &DeviceParams, config: &ReconstructionConfig) -> Result<EffectSet> {
    params.validate()?;
    config.validate()?;
    let probes = grid.restricted(config.beta_max);
    let space = params.space();
    let mut e_final = CMatrix::zeros(space.dim(), space.dim());
    for n in 0..space.cavity {
        e_final[(space.index(1, n), space.index(1, n))] = C64::new(1.0, 0.0);
    }
    let probe = &config.probe;
    let (d, end) = (probe.displacement_duration, probe.displacement_duration + probe.conditional_duration);
    // the conditional pulse does not depend on β
    let after_displacement: Vec<CMatrix> = probes
        .fock_indices
        .par_iter()
        .map(|&n| {
            let seq = probe_sequence(n, C64::new(0.0, 0.0), params, probe)?;
            propagate_effect_matrix(&e_final, params, &seq, d, end, &probe.adjoint)
        })
        .collect::<Result<_>>()?;
    let nb = probes.beta_grid.len();
    let effects: Vec<EffectOperator> = (0..probes.len())
        .into_par_iter()
        .map(|k| {
            let (i, b) = (k / nb, k % nb);
            let (n, beta) = (probes.fock_indices[i], probes.beta_grid[b]);
            let seq = probe_sequence(n, beta, params, probe)?;
            let m = propagate_effect_matrix(&after_displacement[i], params, &seq, 0.0, d, &probe.adjoint)?;
            let e = EffectOperator::new(Operator::new(space, m)?, n, beta);
            e.check(probe.adjoint.spectrum_tol)?;
            Ok(e)
        })
        .collect::<Result<_>>()?;
    log::info!("built {} effects on {} cavity levels", effects.len(), space.cavity);
    Ok(EffectSet { beta_grid: probes.beta_grid, fock_indices: probes.fock_indices, effects })
}

/// `p_e[n, β] = Tr(ρ E_{n,β}(0))`.
pub fn simulate_tomography(rho_joint: &DensityMatrix, effects: &EffectSet) -> Result<TomographyGrid> {
    if let Some(space) = effects.space() {
        if space != rho_joint.space() {
            return Err(Error::Shape(format!("state on {:?}, effects on {:?}", rho_joint.space(), space)));
        }
    }
    let p_e = effects
        .effects
        .par_iter()
        .map(|e| trace_product(rho_joint.matrix(), e.op.matrix()).re.clamp(0.0, 1.0))
        .collect();
    let grid = TomographyGrid { beta_grid: effects.beta_grid.clone(), fock_indices: effects.fock_indices.clone(), p_e };
    grid.validate()?;
    Ok(grid)
}

/// Reconstruction output.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub rho_d: DensityMatrix,
    /// `f(ρ_D) = −Σ(p − Tr(ρ_D ⊗ ρ_S E))²` after every iteration.
    pub log_likelihood_trace: Vec<f64>,
    pub entropy: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Norm of the projected gradient at the returned iterate.
    pub gradient_norm: f64,
    pub rms_residual: f64,
}

/// JSON form of a reconstructed state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionExport {
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
    pub s_d: f64,
    pub converged: bool,
    pub iterations: usize,
    pub rms_residual: f64,
}

impl Reconstruction {
    pub fn export(&self) -> ReconstructionExport {
        let m = self.rho_d.matrix();
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        ReconstructionExport {
            real: rows(|z| z.re),
            imag: rows(|z| z.im),
            s_d: self.entropy,
            converged: self.converged,
            iterations: self.iterations,
            rms_residual: self.rms_residual,
        }
    }
}

/// Linear measurement map on Hermitian matrices of size `dim`, stored as
/// real rows `[Re F_k, Im F_k]` so that `Tr(ρ F_k) = row_k · [Re ρ, Im ρ]`.
struct Design {
    dim: usize,
    rows: DMatrix<f64>,
    data: DVector<f64>,
}

impl Design {
    fn to_vec(&self, m: &CMatrix) -> DVector<f64> {
        let d2 = self.dim * self.dim;
        DVector::from_fn(2 * d2, |k, _| if k < d2 { m[(k / self.dim, k % self.dim)].re } else { m[((k - d2) / self.dim, (k - d2) % self.dim)].im })
    }

    fn to_matrix(&self, v: &DVector<f64>) -> CMatrix {
        let d2 = self.dim * self.dim;
        CMatrix::from_fn(self.dim, self.dim, |i, j| C64::new(v[i * self.dim + j], v[d2 + i * self.dim + j]))
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.data - &self.rows * x
    }

    /// Sum of squared residuals (the negated objective).
    fn loss(&self, x: &DVector<f64>) -> f64 {
        self.residual(x).norm_squared()
    }

    /// Gradient of the loss.
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        -2.0 * self.rows.tr_mul(&self.residual(x))
    }

    /// Largest eigenvalue of 2·AᵀA by power iteration.
    fn lipschitz(&self) -> f64 {
        let n = self.rows.ncols();
        let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut lambda = 0.0;
        for _ in 0..300 {
            let w = self.rows.tr_mul(&(&self.rows * &v));
            let norm = w.norm();
            if norm == 0.0 {
                return 1.0;
            }
            let next = norm;
            v = w / norm;
            if (next - lambda).abs() <= 1e-10 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        2.0 * lambda * 1.01
    }

    fn project(&self, v: &DVector<f64>, space: Space) -> DVector<f64> {
        let m = self.to_matrix(v);
        let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let rho = project_to_density_matrix(&Operator::new(space, h).expect("square by construction"));
        self.to_vec(rho.matrix())
    }
}

/// Least-squares MaxLike by monotone accelerated projected gradient with
/// backtracking. Accepted iterates never lower the objective.
pub fn maxlike_reconstruct(
    grid: &TomographyGrid,
    effects: &EffectSet,
    config: &ReconstructionConfig,
) -> Result<Reconstruction> {
    config.validate()?;
    grid.validate()?;
    if !grid.has_data() {
        return Err(Error::InsufficientData("grid carries no measured probabilities".into()));
    }
    let Some(space) = effects.space() else {
        return Err(Error::InsufficientData("empty effect set".into()));
    };
    let nr = config.n_trunc_recon;
    if nr > space.n_trunc() {
        return Err(Error::Parameter(format!("n_trunc_recon {nr} exceeds the effect truncation {}", space.n_trunc())));
    }
    let dim = nr + 1;
    let recon_space = Space::cavity(nr);
    let nb = grid.beta_grid.len();
    let mut used: Vec<(usize, f64)> = Vec::new();
    for (i, &n) in grid.fock_indices.iter().enumerate() {
        for (b, &beta) in grid.beta_grid.iter().enumerate() {
            if beta.norm() > config.beta_max + 1e-12 {
                continue;
            }
            let k = effects
                .index_of(n, beta)
                .ok_or_else(|| Error::Shape(format!("no effect for n = {n}, β = {beta}")))?;
            used.push((k, grid.p_e[i * nb + b]));
        }
    }
    if used.is_empty() {
        return Err(Error::InsufficientData(format!("no grid point with |β| ≤ {}", config.beta_max)));
    }
    let d2 = dim * dim;
    let mut rows = DMatrix::<f64>::zeros(used.len(), 2 * d2);
    for (r, (k, _)) in used.iter().enumerate() {
        let e = effects.effects[*k].op.matrix();
        for i in 0..dim {
            for j in 0..dim {
                let f = e[(space.index(0, i), space.index(0, j))] * config.p_g
                    + e[(space.index(1, i), space.index(1, j))] * (1.0 - config.p_g);
                rows[(r, i * dim + j)] = f.re;
                rows[(r, d2 + i * dim + j)] = f.im;
            }
        }
    }
    let design = Design { dim, rows, data: DVector::from_iterator(used.len(), used.iter().map(|(_, p)| *p)) };
    let lip = design.lipschitz();

    let mut x = design.to_vec(&(CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0)));
    let mut fx = design.loss(&x);
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut eta = config.step_size / lip;
    let mut trace = vec![-fx];
    let mut converged = false;
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;
    const CHECK_EVERY: usize = 20;

    while iterations < config.max_iters {
        iterations += 1;
        let gy = design.gradient(&y);
        let fy = design.loss(&y);
        // backtracking on the quadratic upper bound
        let z = loop {
            let z = design.project(&(&y - &gy * eta), recon_space);
            let dz = &z - &y;
            if design.loss(&z) <= fy + gy.dot(&dz) + dz.norm_squared() / (2.0 * eta) + 1e-15 * fy.abs() || eta < 1e-6 / lip {
                break z;
            }
            eta *= 0.5;
        };
        let fz = design.loss(&z);
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x + (&z - &x) * (t / t_next) + (&x - &x_prev) * ((t - 1.0) / t_next);
        t = t_next;
        trace.push(-fx);

        if iterations % CHECK_EVERY == 0 || iterations == config.max_iters {
            let g = design.gradient(&x);
            let step = 1.0 / lip;
            gradient_norm = (&x - design.project(&(&x - &g * step), recon_space)).norm() / step;
            if gradient_norm <= config.convergence_tol {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        log::warn!("MaxLike stopped after {iterations} iterations, projected gradient {gradient_norm:.3e}");
    }
    let rho = DensityMatrix::new_unchecked(recon_space, hermitian_part(&design.to_matrix(&x)));
    let rms_residual = (fx / used.len() as f64).sqrt();
    Ok(Reconstruction {
        entropy: von_neumann_entropy(&rho),
        rho_d: rho,
        log_likelihood_trace: trace,
        converged,
        iterations,
        gradient_norm,
        rms_residual,
    })
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(&((m + m.adjoint()) * C64::new(0.5, 0.0)));
    reassemble(&vectors, &values)
}

/// Reconstruction setting varied by [`entropy_sensitivity_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "parameter", content = "values")]
pub enum SweepAxis {
    NTruncRecon(Vec<usize>),
    BetaMax(Vec<f64>),
    PG(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub value: f64,
    pub s_d: f64,
    pub converged: bool,
    pub rms_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub parameter: String,
    pub rows: Vec<SensitivityRow>,
    /// max − min of S_D over the sweep.
    pub spread: f64,
    /// Longest run of consecutive sweep values whose S_D stay within
    /// `PLATEAU_WIDTH` of each other, as (first, last) value.
    pub plateau: Option<(f64, f64)>,
}

/// S_D spread that still counts as flat.
pub const PLATEAU_WIDTH: f64 = 0.05;

/// S_D as a function of one reconstruction setting, others at `baseline`.
pub fn entropy_sensitivity_sweep(
    grid: &TomographyGrid,
    effects: &EffectSet,
    baseline: &ReconstructionConfig,
    axis: &SweepAxis,
) -> Result<SensitivityTable> {
    let configs: Vec<(f64, ReconstructionConfig)> = match axis {
        SweepAxis::NTruncRecon(v) => {
            v.iter().map(|&n| (n as f64, ReconstructionConfig { n_trunc_recon: n, ..baseline.clone() })).collect()
        }
        SweepAxis::BetaMax(v) => v.iter().map(|&b| (b, ReconstructionConfig { beta_max: b, ..baseline.clone() })).collect(),
        SweepAxis::PG(v) => v.iter().map(|&p| (p, ReconstructionConfig { p_g: p, ..baseline.clone() })).collect(),
    };
    let parameter = match axis {
        SweepAxis::NTruncRecon(_) => "n_trunc_recon",
        SweepAxis::BetaMax(_) => "beta_max",
        SweepAxis::PG(_) => "p_g",
    };
    let rows: Vec<SensitivityRow> = configs
        .par_iter()
        .map(|(value, cfg)| {
            let r = maxlike_reconstruct(grid, effects, cfg)?;
            Ok(SensitivityRow { value: *value, s_d: r.entropy, converged: r.converged, rms_residual: r.rms_residual })
        })
        .collect::<Result<_>>()?;
    let s: Vec<f64> = rows.iter().map(|r| r.s_d).collect();
    let spread = s.iter().copied().fold(f64::NEG_INFINITY, f64::max) - s.iter().copied().fold(f64::INFINITY, f64::min);
    let mut plateau: Option<(usize, usize)> = None;
    for a in 0..s.len() {
        let (mut lo, mut hi) = (s[a], s[a]);
        let mut b = a;
        while b + 1 < s.len() {
            let v = s[b + 1];
            if v.max(hi) - v.min(lo) > PLATEAU_WIDTH {
                break;
            }
            lo = lo.min(v);
            hi = hi.max(v);
            b += 1;
        }
        if plateau.is_none_or(|(p, q)| b - a > q - p) {
            plateau = Some((a, b));
        }
    }
    Ok(SensitivityTable {
        parameter: parameter.into(),
        plateau: plateau.map(|(a, b)| (rows[a].value, rows[b].value)),
        spread: if rows.is_empty() { 0.0 } else { spread },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{coherent_ket, coherent_state, displacement, fock_ket, product_state};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn vacuum(n_trunc: usize) -> DensityMatrix {
        DensityMatrix::basis_state(Space::cavity(n_trunc), 0, 0).unwrap()
    }

    #[test]
    fn husimi_of_vacuum() {
        let rho = vacuum(20);
        assert_abs_diff_eq!(husimi_q(&rho, 0, C64::new(0.0, 0.0)).unwrap(), 1.0 / PI, epsilon = 1e-15);
        let b = C64::new(0.7, -1.1);
        assert_abs_diff_eq!(husimi_q(&rho, 0, b).unwrap(), (-b.norm_sqr()).exp() / PI, epsilon = 1e-14);
    }

    #[test]
    fn husimi_of_coherent_state() {
        let alpha = C64::new(1.0, 0.0);
        let beta = C64::new(0.5, 0.0);
        let rho = coherent_state(alpha, 30).unwrap();
        let x = (alpha - beta).norm_sqr();
        let expected = (-x).exp() * x * x / (PI * 2.0);
        assert_abs_diff_eq!(husimi_q(&rho, 2, beta).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn displaced_fock_matches_matrix_exponential() {
        let beta = C64::new(0.8, 0.6);
        let d = displacement(beta, 40).unwrap();
        for n in [0, 1, 4] {
            let v = displaced_fock(n, beta, 41);
            let col = d.matrix() * fock_ket(n, 41);
            for m in 0..20 {
                assert_abs_diff_eq!((v[m] - col[m]).norm(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn husimi_completeness() {
        let rho = coherent_state(C64::new(0.4, 0.9), 40).unwrap();
        for beta in [C64::new(0.0, 0.0), C64::new(1.3, -0.2), C64::new(-0.5, 2.0)] {
            let total: f64 = (0..=40).map(|n| PI * husimi_q(&rho, n, beta).unwrap()).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn grid_layout_and_json() {
        let g = TomographyGrid::desk();
        assert_eq!(g.beta_grid.len(), 225);
        assert_eq!(g.fock_indices, vec![0, 1, 2, 3]);
        for b in &g.beta_grid {
            assert!(g.beta_grid.iter().any(|c| (c + b).norm() < 1e-12), "grid not symmetric at {b}");
        }
        let full = TomographyGrid::full();
        assert_eq!(full.len(), 31 * 31 * 6);
        let mut r = g.restricted(1.0);
        r.p_e = (0..r.len()).map(|k| k as f64 / r.len() as f64).collect();
        let back = TomographyGrid::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        r.p_e[0] = 1.2;
        assert!(r.validate().is_err());
    }

    #[test]
    fn probe_sequence_timing() {
        let p = DeviceParams::default().with_n_trunc(4);
        let s = probe_sequence(2, C64::new(1.0, 0.0), &p, &ProbeSettings::default()).unwrap();
        assert_abs_diff_eq!(s.total_duration, 440e-9, epsilon = 1e-18);
        assert_abs_diff_eq!(s.segments[1].carrier_detuning, p.qubit_offset_at_fock(2), epsilon = 1e-6);
        assert_abs_diff_eq!(s.segments[0].area(), 1.0, epsilon = 1e-12);
    }

    /// Small effect set shared by the reconstruction tests.
    fn small_effects() -> (DeviceParams, EffectSet) {
        let params = DeviceParams::default().with_n_trunc(16);
        let grid = TomographyGrid::square(9, 2.0, 2).unwrap();
        let cfg = ReconstructionConfig { n_trunc_recon: 4, beta_max: 2.0, ..Default::default() };
        let effects = build_effects(&grid, &params, &cfg).unwrap();
        (params, effects)
    }

    #[test]
    fn effects_approach_ideal_projectors_without_decoherence() {
        let params = DeviceParams::default().with_n_trunc(14).without_decoherence();
        let grid = TomographyGrid { beta_grid: vec![C64::new(0.0, 0.0), C64::new(0.5, 0.3)], fock_indices: vec![0, 1], p_e: vec![] };
        let effects = build_effects(&grid, &params, &ReconstructionConfig::default()).unwrap();
        let space = params.space();
        for e in &effects.effects {
            // ground block ≈ D(β)|n⟩⟨n|D(β)†
            let ket = displacement(e.beta, params.n_trunc).unwrap().matrix() * fock_ket(e.n, space.cavity);
            let m = e.op.matrix();
            let mut q = C64::new(0.0, 0.0);
            for i in 0..space.cavity {
                for j in 0..space.cavity {
                    q += ket[i].conj() * m[(space.index(0, i), space.index(0, j))] * ket[j];
                }
            }
            // Kerr acts during the finite displacement pulse
            let bound = if e.beta.norm() == 0.0 { 0.97 } else { 0.9 };
            assert!(q.re > bound, "n = {} β = {}: {}", e.n, e.beta, q.re);
        }
    }

    #[test]
    fn undisplaced_vacuum_probe_without_dissipation() {
        let params = DeviceParams::default().with_n_trunc(6).without_decoherence();
        let grid = TomographyGrid { beta_grid: vec![C64::new(0.0, 0.0)], fock_indices: vec![0], p_e: vec![] };
        let effects = build_effects(&grid, &params, &ReconstructionConfig::default()).unwrap();
        let space = params.space();
        let m = effects.effects[0].op.matrix();
        // |g,0⟩ and |e,0⟩ swap, every other level keeps its qubit state
        for n in 0..space.cavity {
            let (g, e) = (m[(space.index(0, n), space.index(0, n))].re, m[(space.index(1, n), space.index(1, n))].re);
            let (want_g, want_e) = if n == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
            assert!((g - want_g).abs() < 0.02 && (e - want_e).abs() < 0.02, "n = {n}: {g} {e}");
        }
    }

    #[test]
    fn tomography_round_trip_coherent() {
        let (params, effects) = small_effects();
        let rho_d = coherent_state(C64::new(0.7, 0.2), params.n_trunc).unwrap();
        let qubit = DensityMatrix::diagonal(Space::qubit(), &[0.97, 0.03]).unwrap();
        let joint = product_state(&qubit, &rho_d).unwrap();
        let grid = simulate_tomography(&joint, &effects).unwrap();
        let cfg = ReconstructionConfig { n_trunc_recon: 8, beta_max: 2.0, ..Default::default() };
        let r = maxlike_reconstruct(&grid, &effects, &cfg).unwrap();
        let ket = coherent_ket(C64::new(0.7, 0.2), 8);
        assert!(r.rho_d.fidelity_with_pure(&ket) > 0.999, "fidelity {}", r.rho_d.fidelity_with_pure(&ket));
        assert!(r.log_likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    }

    #[test]
    fn reconstruction_is_gauge_invariant() {
        let (params, effects) = small_effects();
        let rho_d = coherent_state(C64::new(0.5, -0.4), params.n_trunc).unwrap().mix(&vacuum(params.n_trunc), 0.6).unwrap();
        let qubit = DensityMatrix::diagonal(Space::qubit(), &[0.97, 0.03]).unwrap();
        let grid = simulate_tomography(&product_state(&qubit, &rho_d).unwrap(), &effects).unwrap();
        let cfg = ReconstructionConfig { n_trunc_recon: 6, beta_max: 2.0, ..Default::default() };
        let a = maxlike_reconstruct(&grid, &effects, &cfg).unwrap();
        let rotated = effects.rotated(0.9).unwrap();
        let grid_rot = TomographyGrid { beta_grid: rotated.beta_grid.clone(), ..grid.clone() };
        let b = maxlike_reconstruct(&grid_rot, &rotated, &cfg).unwrap();
        assert_abs_diff_eq!(a.entropy, b.entropy, epsilon = 1e-6);
    }

    #[test]
    fn sweep_reports_spread_and_plateau() {
        let (params, effects) = small_effects();
        let qubit = DensityMatrix::diagonal(Space::qubit(), &[0.97, 0.03]).unwrap();
        let grid = simulate_tomography(&product_state(&qubit, &vacuum(params.n_trunc)).unwrap(), &effects).unwrap();
        let base = ReconstructionConfig { n_trunc_recon: 5, beta_max: 2.0, ..Default::default() };
        let t = entropy_sensitivity_sweep(&grid, &effects, &base, &SweepAxis::PG(vec![0.95, 0.97, 0.99])).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.spread >= 0.0);
        assert!(t.plateau.is_some());
        assert!(t.rows[1].s_d < 0.02);
    }
}
