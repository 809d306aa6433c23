// SPDX-License-Identifier: Apache-2.0

//! Triplet-form sparse operators for the master-equation right-hand side.
//!
//! Dense matrices here are nalgebra's column-major `DMatrix`, so `(i, k)` lives
//! at `k * dim + i` in the backing slice.

use crate::operators::{CMatrix, C64};

#[derive(Clone, Debug)]
pub(crate) struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::new();
        for j in 0..dim {
            for i in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        SparseOp { dim, entries }
    }

    pub fn adjoint(&self) -> Self {
        SparseOp { dim: self.dim, entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect() }
    }

    /// `out += c · S · x`
    pub fn mul_left_acc(&self, c: C64, x: &CMatrix, out: &mut CMatrix) {
        let n = self.dim;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for &(i, j, v) in &self.entries {
            let cv = c * v;
            for k in 0..n {
                os[k * n + i] += cv * xs[k * n + j];
            }
        }
    }

    /// `out += c · x · S`
    pub fn mul_right_acc(&self, c: C64, x: &CMatrix, out: &mut CMatrix) {
        let n = self.dim;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for &(j, k, v) in &self.entries {
            let cv = c * v;
            let src = &xs[j * n..(j + 1) * n];
            let dst = &mut os[k * n..(k + 1) * n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += cv * s;
            }
        }
    }
}

/// `out = M + M†`, written in place.
pub(crate) fn hermitian_sum(m: &CMatrix, out: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..=j {
            let v = m[(i, j)] + m[(j, i)].conj();
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| C64::new((seed * (i + 2 * j) as f64).sin(), (seed * (3 * i + j) as f64).cos()))
    }

    #[test]
    fn products_match_dense() {
        let mut a = sample(5, 0.7);
        a[(1, 2)] = C64::new(0.0, 0.0);
        let x = sample(5, 1.3);
        let s = SparseOp::from_dense(&a);
        let c = C64::new(0.3, -1.1);

        let mut left = CMatrix::zeros(5, 5);
        s.mul_left_acc(c, &x, &mut left);
        assert!((left - &a * &x * c).norm() < 1e-12);

        let mut right = CMatrix::zeros(5, 5);
        s.adjoint().mul_right_acc(c, &x, &mut right);
        assert!((right - &x * a.adjoint() * c).norm() < 1e-12);
    }
}
