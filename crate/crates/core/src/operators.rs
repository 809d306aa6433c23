// SPDX-License-Identifier: Apache-2.0

//! Dense operator algebra on the truncated qubit ⊗ cavity space.
//!
//! Every operator carries the [`Space`] it acts on. Joint indices are
//! qubit-major, `q * (n_trunc + 1) + n`, with `q = 0` the ground state |g⟩
//! and `q = 1` the excited state |e⟩. A qubit-only operator has a cavity
//! factor of dimension 1 and vice versa, so the same type covers the factors
//! and the joint space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default eigenvalue cleanup threshold.
pub const PSD_TOL: f64 = 1e-10;
/// Default unit-trace tolerance.
pub const TRACE_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Dimensions of the qubit and cavity factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    pub qubit: usize,
    pub cavity: usize,
}

impl Space {
    pub fn joint(n_trunc: usize) -> Self {
        Space { qubit: 2, cavity: n_trunc + 1 }
    }

    pub fn qubit() -> Self {
        Space { qubit: 2, cavity: 1 }
    }

    pub fn cavity(n_trunc: usize) -> Self {
        Space { qubit: 1, cavity: n_trunc + 1 }
    }

    pub fn dim(&self) -> usize {
        self.qubit * self.cavity
    }

    /// Largest retained Fock index.
    pub fn n_trunc(&self) -> usize {
        self.cavity.saturating_sub(1)
    }

    pub fn index(&self, q: usize, n: usize) -> usize {
        q * self.cavity + n
    }
}

/// Square complex matrix tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: Space,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: Space, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() != space.dim() {
            return Err(Error::Shape(format!(
                "matrix dimension {} does not match space {:?}",
                matrix.nrows(),
                space
            )));
        }
        Ok(Operator { space, matrix })
    }

    pub fn identity(space: Space) -> Self {
        Operator { space, matrix: CMatrix::identity(space.dim(), space.dim()) }
    }

    pub fn zeros(space: Space) -> Self {
        Operator { space, matrix: CMatrix::zeros(space.dim(), space.dim()) }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Operator {
        Operator { space: self.space, matrix: self.matrix.adjoint() }
    }

    fn check_same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::Shape(format!(
                "operators act on different spaces: {:?} vs {:?}",
                self.space, other.space
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        Ok(Operator { space: self.space, matrix: &self.matrix * &other.matrix })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        Ok(Operator { space: self.space, matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other)?;
        Ok(Operator { space: self.space, matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator { space: self.space, matrix: &self.matrix * factor }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry of the anti-Hermitian part, `max |A - A†| / 2`.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    /// Embeds a qubit-only operator as `self ⊗ I` on the joint space.
    pub fn on_joint_from_qubit(&self, n_trunc: usize) -> Result<Operator> {
        tensor(self, &Operator::identity(Space::cavity(n_trunc)))
    }

    /// Embeds a cavity-only operator as `I ⊗ self` on the joint space.
    pub fn on_joint_from_cavity(&self) -> Result<Operator> {
        tensor(&Operator::identity(Space::qubit()), self)
    }
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Annihilation operator `d` on the cavity Fock space `0..=n_trunc`.
pub fn fock_annihilation(n_trunc: usize) -> Result<Operator> {
    if n_trunc < 1 {
        return Err(Error::InvalidDimension(format!(
            "cavity truncation must be at least 1, got {n_trunc}"
        )));
    }
    let dim = n_trunc + 1;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(Space::cavity(n_trunc), m)
}

/// Photon number operator `d†d`.
pub fn number_operator(n_trunc: usize) -> Result<Operator> {
    if n_trunc < 1 {
        return Err(Error::InvalidDimension(format!(
            "cavity truncation must be at least 1, got {n_trunc}"
        )));
    }
    let diag = CVector::from_iterator(n_trunc + 1, (0..=n_trunc).map(|n| C64::new(n as f64, 0.0)));
    Operator::new(Space::cavity(n_trunc), CMatrix::from_diagonal(&diag))
}

fn qubit_op(entries: [[C64; 2]; 2]) -> Operator {
    let m = CMatrix::from_fn(2, 2, |i, j| entries[i][j]);
    Operator { space: Space::qubit(), matrix: m }
}

/// `σ₋ = |g⟩⟨e|`.
pub fn sigma_minus() -> Operator {
    qubit_op([[ZERO, ONE], [ZERO, ZERO]])
}

/// `σ₊ = |e⟩⟨g|`.
pub fn sigma_plus() -> Operator {
    qubit_op([[ZERO, ZERO], [ONE, ZERO]])
}

/// `σx = σ₊ + σ₋`.
pub fn sigma_x() -> Operator {
    qubit_op([[ZERO, ONE], [ONE, ZERO]])
}

/// `σy = i(σ₋ − σ₊)`, so that `[σy, σz] = 2iσx` with `σz = |e⟩⟨e| − |g⟩⟨g|`.
pub fn sigma_y() -> Operator {
    qubit_op([[ZERO, I], [-I, ZERO]])
}

/// `σz = |e⟩⟨e| − |g⟩⟨g|`.
pub fn sigma_z() -> Operator {
    qubit_op([[-ONE, ZERO], [ZERO, ONE]])
}

pub fn excited_projector() -> Operator {
    qubit_op([[ZERO, ZERO], [ZERO, ONE]])
}

pub fn ground_projector() -> Operator {
    qubit_op([[ONE, ZERO], [ZERO, ZERO]])
}

/// Kronecker product `a ⊗ b`.
///
/// The first factor is the slow index. To keep the qubit-major convention the
/// product is rejected when `a` carries a cavity factor and `b` a qubit factor.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.space.cavity > 1 && b.space.qubit > 1 {
        return Err(Error::Shape(format!(
            "tensor {:?} ⊗ {:?} would break qubit-major ordering",
            a.space, b.space
        )));
    }
    let space = Space { qubit: a.space.qubit * b.space.qubit, cavity: a.space.cavity * b.space.cavity };
    Operator::new(space, a.matrix.kronecker(&b.matrix))
}

/// Displacement operator `exp(β d† − β* d)` on the truncated Fock space.
pub fn displacement(beta: C64, n_trunc: usize) -> Result<Operator> {
    if beta.norm_sqr() > n_trunc as f64 / 4.0 {
        log::warn!(
            "displacement |beta|^2 = {:.3} is large for n_trunc = {n_trunc}; truncation error likely",
            beta.norm_sqr()
        );
    }
    let d = fock_annihilation(n_trunc)?;
    let generator = d.matrix.adjoint() * beta - &d.matrix * beta.conj();
    Operator::new(Space::cavity(n_trunc), generator.exp())
}

/// Fock basis vector `|n⟩` in a space of dimension `dim`.
pub fn fock_ket(n: usize, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[n] = ONE;
    v
}

/// Truncated coherent-state amplitudes `e^{-|α|²/2} αⁿ/√n!`, renormalized on
/// the retained levels.
pub fn coherent_ket(alpha: C64, n_trunc: usize) -> CVector {
    let mut v = CVector::zeros(n_trunc + 1);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = amp;
    for n in 1..=n_trunc {
        amp = amp * alpha / (n as f64).sqrt();
        v[n] = amp;
    }
    let norm = v.norm();
    if norm > 0.0 {
        v /= C64::new(norm, 0.0);
    }
    v
}

pub fn coherent_state(alpha: C64, n_trunc: usize) -> Result<DensityMatrix> {
    if n_trunc < 1 {
        return Err(Error::InvalidDimension(format!(
            "cavity truncation must be at least 1, got {n_trunc}"
        )));
    }
    DensityMatrix::pure(Space::cavity(n_trunc), &coherent_ket(alpha, n_trunc))
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitize(m);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = hermitize(m);
    let mut values: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Euclidean projection of a real vector onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: Space,
    matrix: CMatrix,
    trace_tol: f64,
    psd_tol: f64,
}

impl DensityMatrix {
    pub fn new(space: Space, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(space, matrix, TRACE_TOL, PSD_TOL)
    }

    pub fn with_tolerances(space: Space, matrix: CMatrix, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        let op = Operator::new(space, matrix)?;
        let rho = DensityMatrix { space, matrix: op.matrix, trace_tol, psd_tol };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without validation. Callers guarantee validity up to
    /// integrator round-off.
    pub(crate) fn new_unchecked(space: Space, matrix: CMatrix) -> Self {
        DensityMatrix { space, matrix, trace_tol: TRACE_TOL, psd_tol: PSD_TOL }
    }

    pub fn pure(space: Space, ket: &CVector) -> Result<Self> {
        if ket.len() != space.dim() {
            return Err(Error::Shape(format!("ket of length {} for space {:?}", ket.len(), space)));
        }
        let norm = ket.norm();
        if norm == 0.0 {
            return Err(Error::Validation("zero state vector".into()));
        }
        let k = ket / C64::new(norm, 0.0);
        Self::new(space, &k * k.adjoint())
    }

    /// `|q, n⟩⟨q, n|` on the joint space.
    pub fn basis_state(space: Space, q: usize, n: usize) -> Result<Self> {
        if q >= space.qubit || n >= space.cavity {
            return Err(Error::Shape(format!("basis state ({q}, {n}) outside {:?}", space)));
        }
        let mut m = CMatrix::zeros(space.dim(), space.dim());
        let k = space.index(q, n);
        m[(k, k)] = ONE;
        Self::new(space, m)
    }

    pub fn maximally_mixed(space: Space) -> Self {
        let d = space.dim();
        DensityMatrix::new_unchecked(space, CMatrix::identity(d, d) / C64::new(d as f64, 0.0))
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(space: Space, probs: &[f64]) -> Result<Self> {
        if probs.len() != space.dim() {
            return Err(Error::Shape(format!(
                "{} populations for space of dimension {}",
                probs.len(),
                space.dim()
            )));
        }
        let diag = CVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(space, CMatrix::from_diagonal(&diag))
    }

    pub fn tolerances(&self) -> (f64, f64) {
        (self.trace_tol, self.psd_tol)
    }

    pub fn with_tol(mut self, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        self.trace_tol = trace_tol;
        self.psd_tol = psd_tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > self.trace_tol || tr.im.abs() > self.trace_tol {
            return Err(Error::Validation(format!("trace {tr} differs from 1")));
        }
        let herm = hermiticity_defect(&self.matrix);
        if herm > self.psd_tol {
            return Err(Error::Validation(format!("not Hermitian (defect {herm:.3e})")));
        }
        let min = self.min_eigenvalue();
        if min < -self.psd_tol {
            return Err(Error::Validation(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn as_operator(&self) -> Operator {
        Operator { space: self.space, matrix: self.matrix.clone() }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix).first().copied().unwrap_or(0.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(op · ρ)`.
    pub fn expect(&self, op: &Operator) -> Result<C64> {
        if op.space != self.space {
            return Err(Error::Shape(format!(
                "observable on {:?} applied to state on {:?}",
                op.space, self.space
            )));
        }
        Ok(trace_product(&op.matrix, &self.matrix))
    }

    /// Population `⟨k|ρ|k⟩` of a basis index.
    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalized ket.
    pub fn fidelity_with_pure(&self, ket: &CVector) -> f64 {
        (ket.adjoint() * &self.matrix * ket)[(0, 0)].re
    }

    /// Mixture `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.space != other.space {
            return Err(Error::Shape("mixing states on different spaces".into()));
        }
        Ok(DensityMatrix::new_unchecked(
            self.space,
            &self.matrix * C64::new(w, 0.0) + &other.matrix * C64::new(1.0 - w, 0.0),
        ))
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Shape("trace distance between different spaces".into()));
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// `Tr(A·B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `|q⟩ ⊗ ρ_cavity` style product of a qubit state and a cavity state.
pub fn product_state(qubit: &DensityMatrix, cavity: &DensityMatrix) -> Result<DensityMatrix> {
    if qubit.space != Space::qubit() || cavity.space.qubit != 1 {
        return Err(Error::Shape(format!(
            "product_state expects qubit ⊗ cavity, got {:?} ⊗ {:?}",
            qubit.space, cavity.space
        )));
    }
    let op = tensor(&qubit.as_operator(), &cavity.as_operator())?;
    Ok(DensityMatrix::new_unchecked(op.space, op.matrix))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    Qubit,
    Cavity,
}

/// Reduced state on the kept subsystem.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    let space = rho.space;
    if rho.matrix.nrows() != space.dim() {
        return Err(Error::Shape("density matrix dimension does not match its space".into()));
    }
    let m = &rho.matrix;
    let (out_space, out) = match keep {
        Subsystem::Qubit => {
            let s = Space { qubit: space.qubit, cavity: 1 };
            let out = CMatrix::from_fn(space.qubit, space.qubit, |q, p| {
                (0..space.cavity).map(|n| m[(space.index(q, n), space.index(p, n))]).sum()
            });
            (s, out)
        }
        Subsystem::Cavity => {
            let s = Space { qubit: 1, cavity: space.cavity };
            let out = CMatrix::from_fn(space.cavity, space.cavity, |n, k| {
                (0..space.qubit).map(|q| m[(space.index(q, n), space.index(q, k))]).sum()
            });
            (s, out)
        }
    };
    Ok(DensityMatrix { space: out_space, matrix: out, trace_tol: rho.trace_tol, psd_tol: rho.psd_tol })
}

/// Von Neumann entropy in nats. Eigenvalues below the state's `psd_tol` count as zero.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues(), rho.psd_tol)
}

pub(crate) fn entropy_of_spectrum(values: &[f64], cutoff: f64) -> f64 {
    values
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Nearest density matrix in Frobenius norm.
pub fn project_to_density_matrix(m: &Operator) -> DensityMatrix {
    let (values, vectors) = hermitian_eigen(&m.matrix);
    let projected = project_to_simplex(&values);
    let out = reassemble(&vectors, &projected);
    DensityMatrix::new_unchecked(m.space, out)
}

pub(crate) fn reassemble(vectors: &CMatrix, values: &[f64]) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &l) in values.iter().enumerate() {
        let mut col = scaled.column_mut(j);
        col *= C64::new(l, 0.0);
    }
    let out = scaled * vectors.adjoint();
    debug_assert_eq!(out.nrows(), n);
    hermitize(&out)
}

/// Moves a state to another cavity truncation: pads with empty levels or
/// drops levels above the new cutoff and renormalizes.
pub fn resize_cavity(rho: &DensityMatrix, n_trunc: usize) -> Result<DensityMatrix> {
    let old = rho.space;
    let new = Space { qubit: old.qubit, cavity: n_trunc + 1 };
    let keep = old.cavity.min(new.cavity);
    let mut out = CMatrix::zeros(new.dim(), new.dim());
    for q in 0..old.qubit {
        for p in 0..old.qubit {
            for n in 0..keep {
                for k in 0..keep {
                    out[(new.index(q, n), new.index(p, k))] = rho.matrix[(old.index(q, n), old.index(p, k))];
                }
            }
        }
    }
    let tr = out.trace().re;
    if tr <= 0.0 {
        return Err(Error::Validation("no weight left after truncation".into()));
    }
    out /= C64::new(tr, 0.0);
    Ok(DensityMatrix { space: new, matrix: out, trace_tol: rho.trace_tol, psd_tol: rho.psd_tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn annihilation_entries() {
        let d = fock_annihilation(4).unwrap();
        assert_abs_diff_eq!(d.matrix()[(0, 1)].re, 1.0);
        assert_abs_diff_eq!(d.matrix()[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!((d.matrix() * fock_ket(0, 5)).norm(), 0.0);
        assert!(matches!(fock_annihilation(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn canonical_commutator_except_last_row() {
        let n = 6;
        let d = fock_annihilation(n).unwrap();
        let m = d.matrix();
        let comm = m * m.adjoint() - m.adjoint() * m;
        for k in 0..n {
            assert_abs_diff_eq!(comm[(k, k)].re, 1.0, epsilon = 1e-12);
        }
        // truncation artifact: ⟨N|[d, d†]|N⟩ = −N
        assert_abs_diff_eq!(comm[(n, n)].re, -(n as f64), epsilon = 1e-12);
    }

    #[test]
    fn sigma_algebra() {
        let sp = sigma_plus();
        let sm = sigma_minus();
        let lhs = sp.mul(&sm).unwrap();
        let rhs = Operator::identity(Space::qubit()).add(&sigma_z()).unwrap().scale(C64::new(0.5, 0.0));
        assert_eq!(lhs, rhs);
        // [σy, σz] = 2iσx
        let y = sigma_y();
        let z = sigma_z();
        let comm = y.mul(&z).unwrap().sub(&z.mul(&y).unwrap()).unwrap();
        assert_eq!(comm, sigma_x().scale(C64::new(0.0, 2.0)));
    }

    #[test]
    fn tensor_identities() {
        let i2 = Operator::identity(Space::qubit());
        let i3 = Operator::identity(Space::cavity(2));
        let i6 = tensor(&i2, &i3).unwrap();
        assert_eq!(i6, Operator::identity(Space::joint(2)));

        let d = fock_annihilation(2).unwrap();
        let lhs = tensor(&sigma_z(), &i3).unwrap().mul(&tensor(&i2, &d).unwrap()).unwrap();
        assert_eq!(lhs, tensor(&sigma_z(), &d).unwrap());

        assert!(tensor(&i3, &i2).is_err());
    }

    #[test]
    fn tensor_trace_factorizes() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new(0.3 * i as f64 - 0.7, 0.1 * j as f64 + 0.2));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64 * 0.4 + 0.1, i as f64 - 0.5 * j as f64));
        let ta = Operator::new(Space::qubit(), a.clone()).unwrap();
        let tb = Operator::new(Space::cavity(2), b.clone()).unwrap();
        let t = tensor(&ta, &tb).unwrap();
        // direct dense sum for the oracle
        let mut direct = ZERO;
        for i in 0..2 {
            for k in 0..3 {
                direct += a[(i, i)] * b[(k, k)];
            }
        }
        assert_abs_diff_eq!((t.trace() - direct).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn displacement_vacuum_overlap_and_unitarity() {
        let d0 = displacement(ZERO, 10).unwrap();
        assert!(max_abs(&(d0.matrix() - CMatrix::identity(11, 11))) < 1e-14);

        let beta = C64::new(1.5, 0.0);
        let d = displacement(beta, 30).unwrap();
        let p00 = d.matrix()[(0, 0)].norm_sqr();
        assert_abs_diff_eq!(p00, (-beta.norm_sqr()).exp(), epsilon = 1e-6);

        for &b in &[C64::new(2.0, 0.0), C64::new(-1.2, 1.3), C64::new(0.0, -2.0)] {
            let prod = displacement(b, 30).unwrap().mul(&displacement(-b, 30).unwrap()).unwrap();
            assert!(max_abs(&(prod.matrix() - CMatrix::identity(31, 31))) < 1e-8);
        }
    }

    #[test]
    fn displacement_unitarity_under_truncation_rule() {
        for re in [-2.0, -1.0, 0.0, 0.7, 1.5, 2.5] {
            for im in [-1.5, 0.0, 1.0] {
                let b = C64::new(re, im);
                let n = (b.norm_sqr() + 6.0 * b.norm() + 10.0).ceil() as usize;
                let d = displacement(b, n).unwrap();
                let u = d.matrix().adjoint() * d.matrix();
                let defect = max_abs(&(u - CMatrix::identity(n + 1, n + 1)));
                assert!(defect < 1e-6, "beta = {b}, n = {n}, defect = {defect}");
            }
        }
    }

    #[test]
    fn coherent_state_moments() {
        let vac = coherent_state(ZERO, 10).unwrap();
        assert_abs_diff_eq!(vac.population(0), 1.0, epsilon = 1e-15);

        let rho = coherent_state(C64::new(2.0, 0.0), 30).unwrap();
        let n = number_operator(30).unwrap();
        assert_abs_diff_eq!(rho.expect(&n).unwrap().re, 4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn partial_trace_cases() {
        let qa = DensityMatrix::diagonal(Space::qubit(), &[0.3, 0.7]).unwrap();
        let cb = coherent_state(C64::new(0.5, 0.2), 4).unwrap();
        let joint = product_state(&qa, &cb).unwrap();
        let back = partial_trace(&joint, Subsystem::Qubit).unwrap();
        assert!(max_abs(&(back.matrix() - qa.matrix())) < 1e-12);
        let back_c = partial_trace(&joint, Subsystem::Cavity).unwrap();
        assert!(max_abs(&(back_c.matrix() - cb.matrix())) < 1e-12);

        let s = Space::joint(2);
        let mut ket = CVector::zeros(s.dim());
        ket[s.index(0, 0)] = ONE;
        ket[s.index(1, 1)] = ONE;
        let bell = DensityMatrix::pure(s, &ket).unwrap();
        let red = partial_trace(&bell, Subsystem::Qubit).unwrap();
        assert!(max_abs(&(red.matrix() - CMatrix::identity(2, 2) * C64::new(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn entropy_values() {
        let pure = coherent_state(C64::new(0.4, -0.3), 8).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&pure), 0.0, epsilon = 1e-9);
        let mixed = DensityMatrix::maximally_mixed(Space::qubit());
        assert_abs_diff_eq!(von_neumann_entropy(&mixed), 2f64.ln(), epsilon = 1e-12);
        let d = DensityMatrix::diagonal(Space::qubit(), &[0.9, 0.1]).unwrap();
        let oracle = -0.9 * 0.9f64.ln() - 0.1 * 0.1f64.ln();
        assert_abs_diff_eq!(von_neumann_entropy(&d), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.325083, epsilon = 1e-6);
    }

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.6, 0.6, -0.2]);
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn density_projection_examples() {
        let diag = |v: &[f64], n| {
            Operator::new(
                Space::cavity(n),
                CMatrix::from_diagonal(&CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))),
            )
            .unwrap()
        };
        let p = project_to_density_matrix(&diag(&[0.6, 0.6, -0.2], 2));
        assert!(max_abs(&(p.matrix() - diag(&[0.5, 0.5, 0.0], 2).matrix())) < 1e-12);
        let p = project_to_density_matrix(&diag(&[2.0, 0.0], 1));
        assert!(max_abs(&(p.matrix() - diag(&[1.0, 0.0], 1).matrix())) < 1e-12);

        let rho = coherent_state(C64::new(0.8, 0.1), 5).unwrap();
        let mixed = rho.mix(&DensityMatrix::maximally_mixed(Space::cavity(5)), 0.7).unwrap();
        let fixed = project_to_density_matrix(&mixed.as_operator());
        assert!(max_abs(&(fixed.matrix() - mixed.matrix())) < 1e-12);
    }

    #[test]
    fn validation_rejects_bad_states() {
        let s = Space::qubit();
        let not_unit = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE]));
        assert!(DensityMatrix::new(s, not_unit).is_err());
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(1.1, 0.0), C64::new(-0.1, 0.0)]));
        assert!(DensityMatrix::new(s, negative).is_err());
        let mut non_herm = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        non_herm[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(s, non_herm).is_err());
    }

    #[test]
    fn resize_roundtrip() {
        let rho = coherent_state(C64::new(0.3, 0.0), 6).unwrap();
        let joint = product_state(&DensityMatrix::diagonal(Space::qubit(), &[1.0, 0.0]).unwrap(), &rho).unwrap();
        let bigger = resize_cavity(&joint, 9).unwrap();
        let back = resize_cavity(&bigger, 6).unwrap();
        assert!(max_abs(&(back.matrix() - joint.matrix())) < 1e-14);
    }
}
