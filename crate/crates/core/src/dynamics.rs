// SPDX-License-Identifier: Apache-2.0

//! Forward Lindblad propagation of density matrices and backward (Heisenberg
//! picture) propagation of measurement effects.
//!
//! Forward:  dρ/dt = −i[H(t), ρ] + Σ r L(O)ρ,  L(O)ρ = OρO† − ½{O†O, ρ}.
//! Backward: dE/dt = −i[H(t), E] − Σ r L̄(O)E,  L̄(O)E = O†EO − ½{O†O, E},
//! integrated from the final time down to the initial time.
//!
//! Both right-hand sides are evaluated through the non-Hermitian effective
//! generator `H − (i/2)Σ r O†O`, which needs one sparse product per term.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::device::{collapse_operators, static_diagonal, Channel, DeviceParams, Drive, DriveSample, JointOps};
use crate::error::{Error, Result};
use crate::ode::{Integrator, Stepper, System};
use crate::operators::{hermitian_eigenvalues, CMatrix, DensityMatrix, Operator, Space, C64};
use crate::sparse::{hermitian_sum, SparseOp};

/// Default local error tolerance of the adaptive integrator.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Positivity and trace drift tolerated on stored states.
pub const STATE_CHECK_TOL: f64 = 1e-6;
/// Demon bath temperature used for the equilibrium cavity state, K.
pub const DEMON_BATH_TEMPERATURE: f64 = 0.072;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Local error tolerance (adaptive mode).
    pub tol: f64,
    /// Fixed RK4 step in seconds; overrides the adaptive stepper when set.
    pub fixed_step: Option<f64>,
    /// Times at which the full density matrix is kept.
    pub snapshot_times: Vec<f64>,
    /// Compute the smallest eigenvalue at every output step.
    pub check_positivity: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { tol: DEFAULT_TOL, fixed_step: None, snapshot_times: Vec::new(), check_positivity: true }
    }
}

impl EvolveOptions {
    pub fn with_snapshots(mut self, times: impl IntoIterator<Item = f64>) -> Self {
        self.snapshot_times.extend(times);
        self
    }

    fn stepper(&self) -> Result<Stepper> {
        match self.fixed_step {
            Some(dt) if dt > 0.0 => Ok(Stepper::Fixed { dt }),
            Some(dt) => Err(Error::Parameter(format!("fixed step must be positive, got {dt}"))),
            None if self.tol > 0.0 => Ok(Stepper::Adaptive { tol: self.tol }),
            None => Err(Error::Parameter(format!("tolerance must be positive, got {}", self.tol))),
        }
    }
}

/// Time series of a forward evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    pub nbar: Vec<f64>,
    pub p0_cavity: Vec<f64>,
    pub trace_err: Vec<f64>,
    pub hermiticity_err: Vec<f64>,
    /// Smallest eigenvalue per step; empty when positivity checks are off.
    pub min_eigenvalue: Vec<f64>,
    /// Instantaneous qubit Rabi frequency Ω(t), rad/s, continuous from the right.
    pub rabi: Vec<f64>,
    /// Ω(t) continuous from the left; differs from `rabi` at pulse edges.
    pub rabi_left: Vec<f64>,
    /// Purity Tr ρ² per step.
    pub purity: Vec<f64>,
    pub snapshots: Vec<(f64, DensityMatrix)>,
    pub final_state: DensityMatrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Excited-state population per step.
    pub fn pe(&self) -> Vec<f64> {
        self.sz.iter().map(|z| (1.0 + z) / 2.0).collect()
    }

    /// Stored snapshot closest to `t`.
    pub fn snapshot_at(&self, t: f64) -> Option<&DensityMatrix> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .filter(|(ts, _)| (ts - t).abs() <= 1e-15 + 1e-9 * t.abs())
            .map(|(_, r)| r)
    }

    /// Index of the output sample closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        self.t
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// CSV with columns `t_s, sx, sy, sz, nbar, p0_cavity, trace_err`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_s,sx,sy,sz,nbar,p0_cavity,trace_err")?;
        for i in 0..self.t.len() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
                self.t[i], self.sx[i], self.sy[i], self.sz[i], self.nbar[i], self.p0_cavity[i], self.trace_err[i]
            )?;
        }
        Ok(())
    }
}

/// Measurement effect `E_{n,β}` with its tomography label.
#[derive(Clone, Debug)]
pub struct EffectOperator {
    pub op: Operator,
    pub n: usize,
    pub beta: C64,
}

impl EffectOperator {
    pub fn new(op: Operator, n: usize, beta: C64) -> Self {
        EffectOperator { op, n, beta }
    }

    /// Smallest and largest eigenvalue.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let v = hermitian_eigenvalues(self.op.matrix());
        (v.first().copied().unwrap_or(0.0), v.last().copied().unwrap_or(0.0))
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let herm = self.op.hermiticity_defect();
        if herm > tol {
            return Err(Error::IntegratorAccuracy { t: 0.0, detail: format!("effect not Hermitian ({herm:.2e})") });
        }
        let (lo, hi) = self.spectrum_bounds();
        if lo < -tol || hi > 1.0 + tol {
            return Err(Error::IntegratorAccuracy {
                t: 0.0,
                detail: format!("effect spectrum [{lo:.3e}, {hi:.6}] left [0, 1]"),
            });
        }
        Ok(())
    }
}

/// Options for backward effect propagation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjointOptions {
    pub tol: f64,
    pub fixed_step: Option<f64>,
    /// Use the full forward channel set (γ↓ σ₋ and γ↑ σ₊) instead of a single
    /// γ₁ σ₋ relaxation channel.
    pub includes_excitation: bool,
    /// Allowed excursion of the effect spectrum outside [0, 1].
    pub spectrum_tol: f64,
}

impl Default for AdjointOptions {
    fn default() -> Self {
        AdjointOptions { tol: DEFAULT_TOL, fixed_step: None, includes_excitation: false, spectrum_tol: STATE_CHECK_TOL }
    }
}

impl AdjointOptions {
    fn stepper(&self) -> Result<Stepper> {
        EvolveOptions { tol: self.tol, fixed_step: self.fixed_step, ..Default::default() }.stepper()
    }
}

struct Jump {
    rate: f64,
    op: SparseOp,
    adj: SparseOp,
}

/// Master-equation generator with preallocated scratch space.
/// Stage times this close to an interval end count as the end, s.
const EDGE: f64 = 1e-15;

pub(crate) struct Generator<'a> {
    dim: usize,
    /// Forward: H₀ − (i/2)Σ r O†O.
    static_fwd: SparseOp,
    /// Backward: H₀ + (i/2)Σ r O†O.
    static_bwd: SparseOp,
    sigma_plus: SparseOp,
    sigma_minus: SparseOp,
    d: SparseOp,
    d_dag: SparseOp,
    jumps: Vec<Jump>,
    drive: &'a dyn Drive,
    /// Upper end of the breakpoint-free interval being integrated; the drive
    /// is taken as its left limit there.
    upper: f64,
    scratch: CMatrix,
    jump_scratch: CMatrix,
}

/// Which dissipator set the generator carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ChannelSet {
    Forward,
    /// κ_D d, γ₁ σ₋, γ_φ/2 σz.
    AdjointPrinted,
}

impl<'a> Generator<'a> {
    pub fn new(params: &DeviceParams, drive: &'a dyn Drive, set: ChannelSet) -> Result<Self> {
        let ops = JointOps::new(params.n_trunc)?;
        let dim = params.space().dim();
        let mut channels: Vec<(f64, CMatrix)> = collapse_operators(params)?
            .into_iter()
            .filter(|c| match set {
                ChannelSet::Forward => true,
                ChannelSet::AdjointPrinted => c.channel != Channel::QubitExcitation,
            })
            .map(|c| {
                let rate = if set == ChannelSet::AdjointPrinted && c.channel == Channel::QubitRelaxation {
                    params.gamma_1
                } else {
                    c.rate
                };
                (rate, c.jump.into_matrix())
            })
            .collect();
        channels.retain(|(r, _)| *r > 0.0);

        let mut damping = CMatrix::zeros(dim, dim);
        for (r, o) in &channels {
            damping += o.adjoint() * o * C64::new(*r, 0.0);
        }
        let mut h0 = CMatrix::zeros(dim, dim);
        for (k, e) in static_diagonal(params).into_iter().enumerate() {
            h0[(k, k)] = C64::new(e, 0.0);
        }
        let half_i = C64::new(0.0, 0.5);
        let static_fwd = SparseOp::from_dense(&(&h0 - &damping * half_i));
        let static_bwd = SparseOp::from_dense(&(&h0 + &damping * half_i));
        let jumps = channels
            .iter()
            .map(|(r, o)| {
                let op = SparseOp::from_dense(o);
                let adj = op.adjoint();
                Jump { rate: *r, op, adj }
            })
            .collect();
        let d_dag = ops.d.adjoint();
        Ok(Generator {
            dim,
            static_fwd,
            static_bwd,
            sigma_plus: SparseOp::from_dense(&ops.sigma_plus),
            sigma_minus: SparseOp::from_dense(&ops.sigma_minus),
            d: SparseOp::from_dense(&ops.d),
            d_dag: SparseOp::from_dense(&d_dag),
            jumps,
            drive,
            upper: f64::INFINITY,
            scratch: CMatrix::zeros(dim, dim),
            jump_scratch: CMatrix::zeros(dim, dim),
        })
    }

    fn drive_at(&self, t: f64) -> DriveSample {
        if t >= self.upper - EDGE {
            self.drive.sample_left(t)
        } else {
            self.drive.sample(t)
        }
    }

    fn forward(&mut self, t: f64, rho: &CMatrix, out: &mut CMatrix) {
        let s = self.drive_at(t);
        let m = &mut self.scratch;
        m.fill(C64::new(0.0, 0.0));
        let mi = C64::new(0.0, -1.0);
        self.static_fwd.mul_left_acc(mi, rho, m);
        if s.qubit.norm_sqr() > 0.0 {
            self.sigma_plus.mul_left_acc(mi * s.qubit, rho, m);
            self.sigma_minus.mul_left_acc(mi * s.qubit.conj(), rho, m);
        }
        if s.cavity.norm_sqr() > 0.0 {
            self.d_dag.mul_left_acc(mi * s.cavity, rho, m);
            self.d.mul_left_acc(mi * s.cavity.conj(), rho, m);
        }
        hermitian_sum(m, out);
        for j in &self.jumps {
            let tmp = &mut self.jump_scratch;
            tmp.fill(C64::new(0.0, 0.0));
            j.op.mul_left_acc(C64::new(1.0, 0.0), rho, tmp);
            j.adj.mul_right_acc(C64::new(j.rate, 0.0), tmp, out);
        }
    }

    /// L†(E) evaluated at time `t`.
    fn adjoint(&mut self, t: f64, e: &CMatrix, out: &mut CMatrix) {
        let s = self.drive_at(t);
        let m = &mut self.scratch;
        m.fill(C64::new(0.0, 0.0));
        let pi = C64::new(0.0, 1.0);
        self.static_bwd.mul_left_acc(pi, e, m);
        if s.qubit.norm_sqr() > 0.0 {
            self.sigma_plus.mul_left_acc(pi * s.qubit, e, m);
            self.sigma_minus.mul_left_acc(pi * s.qubit.conj(), e, m);
        }
        if s.cavity.norm_sqr() > 0.0 {
            self.d_dag.mul_left_acc(pi * s.cavity, e, m);
            self.d.mul_left_acc(pi * s.cavity.conj(), e, m);
        }
        hermitian_sum(m, out);
        for j in &self.jumps {
            let tmp = &mut self.jump_scratch;
            tmp.fill(C64::new(0.0, 0.0));
            j.adj.mul_left_acc(C64::new(1.0, 0.0), e, tmp);
            j.op.mul_right_acc(C64::new(j.rate, 0.0), tmp, out);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

struct ForwardSystem<'g, 'a>(&'g mut Generator<'a>);

impl System for ForwardSystem<'_, '_> {
    fn eval(&mut self, t: f64, y: &CMatrix, out: &mut CMatrix) {
        self.0.forward(t, y, out);
    }
}

/// Reverse-time system: `s = t_end − t`, `dE/ds = L†_{t_end − s}(E)`.
struct BackwardSystem<'g, 'a> {
    gen: &'g mut Generator<'a>,
    t_end: f64,
}

impl System for BackwardSystem<'_, '_> {
    fn eval(&mut self, s: f64, y: &CMatrix, out: &mut CMatrix) {
        self.gen.adjoint(self.t_end - s, y, out);
    }
}

/// Sorted stop times in `(t0, t1)` where the integrator restarts.
fn interior_breaks(drive: &dyn Drive, t0: f64, t1: f64) -> Vec<f64> {
    let mut b: Vec<f64> = drive.breakpoints().into_iter().filter(|&x| x > t0 && x < t1).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-18);
    b
}

fn check_params_space(rho_space: Space, params: &DeviceParams) -> Result<()> {
    if rho_space != params.space() {
        return Err(Error::Shape(format!(
            "state lives on {:?} but params describe {:?}",
            rho_space,
            params.space()
        )));
    }
    Ok(())
}

struct Observables {
    sx: f64,
    sy: f64,
    sz: f64,
    nbar: f64,
    p0: f64,
    trace_err: f64,
}

fn observables(space: Space, m: &CMatrix) -> Observables {
    let mut sm = C64::new(0.0, 0.0);
    let mut pg = 0.0;
    let mut pe = 0.0;
    let mut nbar = 0.0;
    for n in 0..space.cavity {
        let g = space.index(0, n);
        let e = space.index(1, n);
        sm += m[(e, g)];
        pg += m[(g, g)].re;
        pe += m[(e, e)].re;
        nbar += n as f64 * (m[(g, g)].re + m[(e, e)].re);
    }
    let p0 = m[(space.index(0, 0), space.index(0, 0))].re + m[(space.index(1, 0), space.index(1, 0))].re;
    Observables { sx: 2.0 * sm.re, sy: -2.0 * sm.im, sz: pe - pg, nbar, p0, trace_err: m.trace().re - 1.0 }
}

/// Solves the forward master equation, recording observables at every time in
/// `t_grid` (the first entry is the time of `rho0`).
pub fn evolve(
    rho0: &DensityMatrix,
    params: &DeviceParams,
    sequence: &dyn Drive,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    params.validate()?;
    check_params_space(rho0.space(), params)?;
    if t_grid.is_empty() {
        return Err(Error::Parameter("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("time grid must be strictly increasing".into()));
    }
    let stepper = opts.stepper()?;
    let space = rho0.space();
    let mut gen = Generator::new(params, sequence, ChannelSet::Forward)?;
    let mut integ = Integrator::new(gen.dim(), stepper);
    let t_start = t_grid[0];
    let t_stop = *t_grid.last().unwrap();
    let breaks = interior_breaks(sequence, t_start, t_stop);

    let mut snaps: Vec<f64> = opts.snapshot_times.iter().copied().filter(|&s| s >= t_start && s <= t_stop).collect();
    snaps.sort_by(f64::total_cmp);

    let n_out = t_grid.len();
    let mut traj = Trajectory {
        t: Vec::with_capacity(n_out),
        sx: Vec::with_capacity(n_out),
        sy: Vec::with_capacity(n_out),
        sz: Vec::with_capacity(n_out),
        nbar: Vec::with_capacity(n_out),
        p0_cavity: Vec::with_capacity(n_out),
        trace_err: Vec::with_capacity(n_out),
        hermiticity_err: Vec::with_capacity(n_out),
        min_eigenvalue: Vec::new(),
        rabi: Vec::with_capacity(n_out),
        rabi_left: Vec::with_capacity(n_out),
        purity: Vec::with_capacity(n_out),
        snapshots: Vec::new(),
        final_state: rho0.clone(),
    };

    let mut y = rho0.matrix().clone();
    let record = |t: f64, y: &CMatrix, traj: &mut Trajectory| -> Result<()> {
        let o = observables(space, y);
        let herm = crate::operators::hermiticity_defect(y);
        traj.t.push(t);
        traj.sx.push(o.sx);
        traj.sy.push(o.sy);
        traj.sz.push(o.sz);
        traj.nbar.push(o.nbar);
        traj.p0_cavity.push(o.p0);
        traj.trace_err.push(o.trace_err);
        traj.hermiticity_err.push(herm);
        traj.rabi.push(sequence.sample(t).rabi());
        traj.rabi_left.push(sequence.sample_left(t).rabi());
        traj.purity.push(y.iter().map(|z| z.norm_sqr()).sum());
        if o.trace_err.abs() > STATE_CHECK_TOL || herm > STATE_CHECK_TOL {
            return Err(Error::IntegratorAccuracy {
                t,
                detail: format!("trace error {:.2e}, hermiticity defect {herm:.2e}", o.trace_err),
            });
        }
        if opts.check_positivity {
            let min = hermitian_eigenvalues(y)[0];
            traj.min_eigenvalue.push(min);
            if min < -STATE_CHECK_TOL {
                return Err(Error::IntegratorAccuracy { t, detail: format!("negative eigenvalue {min:.3e}") });
            }
        }
        Ok(())
    };

    record(t_start, &y, &mut traj)?;
    let mut snap_iter = snaps.into_iter().peekable();
    while let Some(&s) = snap_iter.peek() {
        if s <= t_start {
            traj.snapshots.push((s, DensityMatrix::new_unchecked(space, y.clone())));
            snap_iter.next();
        } else {
            break;
        }
    }

    // merge output times, breakpoints and snapshot times into one stop list
    let mut stops: Vec<(f64, u8)> = Vec::new();
    stops.extend(t_grid[1..].iter().map(|&t| (t, 0u8)));
    stops.extend(breaks.iter().map(|&t| (t, 1u8)));
    stops.extend(snap_iter.map(|t| (t, 2u8)));
    stops.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut t = t_start;
    let mut sys = ForwardSystem(&mut gen);
    for (ts, kind) in stops {
        if ts > t {
            sys.0.upper = ts;
            integ.advance(&mut sys, t, ts, &mut y)?;
            t = ts;
        }
        match kind {
            0 => record(ts, &y, &mut traj)?,
            1 => integ.reset(),
            _ => traj.snapshots.push((ts, DensityMatrix::new_unchecked(space, y.clone()))),
        }
    }
    traj.final_state = DensityMatrix::new_unchecked(space, y);
    log::debug!(
        "evolve: {} accepted, {} rejected, {} evaluations",
        integ.stats.accepted,
        integ.stats.rejected,
        integ.stats.evaluations
    );
    Ok(traj)
}

/// Propagates `rho0` from `t0` to `t1` and returns only the final state.
pub fn propagate(
    rho0: &DensityMatrix,
    params: &DeviceParams,
    sequence: &dyn Drive,
    t0: f64,
    t1: f64,
    opts: &EvolveOptions,
) -> Result<DensityMatrix> {
    params.validate()?;
    check_params_space(rho0.space(), params)?;
    let mut gen = Generator::new(params, sequence, ChannelSet::Forward)?;
    let mut integ = Integrator::new(gen.dim(), opts.stepper()?);
    let mut y = rho0.matrix().clone();
    let mut t = t0;
    let mut sys = ForwardSystem(&mut gen);
    for b in interior_breaks(sequence, t0, t1).into_iter().chain(std::iter::once(t1)) {
        sys.0.upper = b;
        integ.advance(&mut sys, t, b, &mut y)?;
        integ.reset();
        t = b;
    }
    Ok(DensityMatrix::new_unchecked(rho0.space(), y))
}

/// Backward propagation of an effect matrix from `t1` to `t0`.
pub(crate) fn propagate_effect_matrix(
    e_final: &CMatrix,
    params: &DeviceParams,
    sequence: &dyn Drive,
    t0: f64,
    t1: f64,
    opts: &AdjointOptions,
) -> Result<CMatrix> {
    let set = if opts.includes_excitation { ChannelSet::Forward } else { ChannelSet::AdjointPrinted };
    let mut gen = Generator::new(params, sequence, set)?;
    if e_final.nrows() != gen.dim() {
        return Err(Error::Shape(format!("effect of dimension {} for space of {}", e_final.nrows(), gen.dim())));
    }
    let mut integ = Integrator::new(gen.dim(), opts.stepper()?);
    let mut y = e_final.clone();
    let span = t1 - t0;
    // breakpoints in reversed time
    let mut stops: Vec<f64> = interior_breaks(sequence, t0, t1).into_iter().map(|b| t1 - b).collect();
    stops.sort_by(f64::total_cmp);
    stops.push(span);
    let mut sys = BackwardSystem { gen: &mut gen, t_end: t1 };
    let mut s = 0.0;
    for stop in stops {
        sys.gen.upper = t1 - s;
        integ.advance(&mut sys, s, stop, &mut y)?;
        integ.reset();
        s = stop;
    }
    Ok(y)
}

/// Heisenberg-picture propagation of `e_final` (defined at `t_grid.last()`)
/// back to `t_grid[0]`.
pub fn evolve_adjoint(
    e_final: &EffectOperator,
    params: &DeviceParams,
    sequence: &dyn Drive,
    t_grid: &[f64],
    opts: &AdjointOptions,
) -> Result<EffectOperator> {
    params.validate()?;
    if e_final.op.space() != params.space() {
        return Err(Error::Shape("effect space does not match params".into()));
    }
    e_final.check(opts.spectrum_tol)?;
    let (Some(&t0), Some(&t1)) = (t_grid.first(), t_grid.last()) else {
        return Err(Error::Parameter("empty time grid".into()));
    };
    if t1 < t0 {
        return Err(Error::Parameter("time grid must be increasing".into()));
    }
    let m = propagate_effect_matrix(e_final.op.matrix(), params, sequence, t0, t1, opts)?;
    let out = EffectOperator::new(Operator::new(params.space(), m)?, e_final.n, e_final.beta);
    out.check(opts.spectrum_tol)?;
    Ok(out)
}

/// Bose–Einstein populations of the cavity at temperature `temperature`,
/// truncated to `n_trunc` and renormalized.
pub fn thermal_cavity_populations(n_trunc: usize, temperature: f64, f_d: f64) -> Vec<f64> {
    let x = if temperature > 0.0 { crate::thermo::PLANCK * f_d / (crate::thermo::BOLTZMANN * temperature) } else { f64::INFINITY };
    let mut p: Vec<f64> = (0..=n_trunc).map(|n| (-(n as f64) * x).exp()).collect();
    if !x.is_finite() {
        p.iter_mut().skip(1).for_each(|v| *v = 0.0);
        p[0] = 1.0;
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Equilibrium joint state: thermal qubit `diag(1 − p_e0, p_e0)` ⊗ thermal
/// cavity at `demon_temperature`.
pub fn equilibrium_state(params: &DeviceParams, demon_temperature: f64) -> Result<DensityMatrix> {
    params.validate()?;
    let space = params.space();
    let cav = thermal_cavity_populations(params.n_trunc, demon_temperature, params.f_d);
    let mut probs = vec![0.0; space.dim()];
    for (q, pq) in [(0usize, 1.0 - params.p_e0), (1, params.p_e0)] {
        for (n, pn) in cav.iter().enumerate() {
            probs[space.index(q, n)] = pq * pn;
        }
    }
    DensityMatrix::diagonal(space, &probs)
}

/// Excited population of the equilibrium qubit.
pub fn steady_state_population(params: &DeviceParams) -> Result<f64> {
    params.validate()?;
    Ok(params.p_e0)
}
