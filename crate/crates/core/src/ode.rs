// SPDX-License-Identifier: Apache-2.0

//! Explicit Runge–Kutta integrators for matrix-valued linear ODEs.

use crate::error::{Error, Result};
use crate::operators::{CMatrix, C64};

pub(crate) trait System {
    fn eval(&mut self, t: f64, y: &CMatrix, out: &mut CMatrix);
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Stepper {
    Adaptive { tol: f64 },
    Fixed { dt: f64 },
}

#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Reusable stage storage for one state dimension.
pub(crate) struct Integrator {
    stepper: Stepper,
    k: [CMatrix; 7],
    tmp: CMatrix,
    fsal_valid: bool,
    h: f64,
    pub stats: Stats,
}

fn axpy_into(out: &mut CMatrix, y: &CMatrix, terms: &[(f64, &CMatrix)]) {
    let o = out.as_mut_slice();
    o.copy_from_slice(y.as_slice());
    for &(c, k) in terms {
        if c == 0.0 {
            continue;
        }
        for (a, b) in o.iter_mut().zip(k.as_slice()) {
            *a += b * c;
        }
    }
}

impl Integrator {
    pub fn new(dim: usize, stepper: Stepper) -> Self {
        let z = || CMatrix::zeros(dim, dim);
        Integrator {
            stepper,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            fsal_valid: false,
            h: 0.0,
            stats: Stats::default(),
        }
    }

    /// Drops the cached first stage; call after the right-hand side changes
    /// discontinuously or the state is modified externally.
    pub fn reset(&mut self) {
        self.fsal_valid = false;
    }

    /// Advances `y` from `t0` to `t1` (`t1 > t0`) in place.
    pub fn advance<S: System>(&mut self, sys: &mut S, t0: f64, t1: f64, y: &mut CMatrix) -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        match self.stepper {
            Stepper::Fixed { dt } => self.advance_fixed(sys, t0, t1, y, dt),
            Stepper::Adaptive { tol } => self.advance_adaptive(sys, t0, t1, y, tol),
        }
    }

    fn advance_fixed<S: System>(&mut self, sys: &mut S, t0: f64, t1: f64, y: &mut CMatrix, dt: f64) -> Result<()> {
        let steps = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        for s in 0..steps {
            let t = t0 + s as f64 * h;
            let [k1, k2, k3, k4, ..] = &mut self.k;
            sys.eval(t, y, k1);
            axpy_into(&mut self.tmp, y, &[(h / 2.0, k1)]);
            sys.eval(t + h / 2.0, &self.tmp, k2);
            axpy_into(&mut self.tmp, y, &[(h / 2.0, k2)]);
            sys.eval(t + h / 2.0, &self.tmp, k3);
            axpy_into(&mut self.tmp, y, &[(h, k3)]);
            sys.eval(t + h, &self.tmp, k4);
            let ys = y.as_mut_slice();
            for (i, v) in ys.iter_mut().enumerate() {
                let inc = k1.as_slice()[i] + (k2.as_slice()[i] + k3.as_slice()[i]) * 2.0 + k4.as_slice()[i];
                *v += inc * (h / 6.0);
            }
            self.stats.accepted += 1;
            self.stats.evaluations += 4;
        }
        self.fsal_valid = false;
        Ok(())
    }

    fn initial_step<S: System>(&mut self, sys: &mut S, t0: f64, y: &CMatrix, tol: f64) -> f64 {
        // Hairer–Wanner starting-step heuristic
        let [k1, k2, ..] = &mut self.k;
        sys.eval(t0, y, k1);
        self.stats.evaluations += 1;
        let scale = |v: C64, yy: C64| v.norm() / (tol + tol * yy.norm());
        let d0 = y.iter().zip(y.iter()).map(|(a, b)| scale(*a, *b)).fold(0.0, f64::max);
        let d1 = k1.iter().zip(y.iter()).map(|(a, b)| scale(*a, *b)).fold(0.0, f64::max);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-12 } else { 0.01 * d0 / d1 };
        axpy_into(&mut self.tmp, y, &[(h0, k1)]);
        sys.eval(t0 + h0, &self.tmp, k2);
        self.stats.evaluations += 1;
        let d2 = k2
            .iter()
            .zip(k1.iter())
            .zip(y.iter())
            .map(|((a, b), yy)| scale(*a - *b, *yy))
            .fold(0.0, f64::max)
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-15) } else { (0.01 / d1.max(d2)).powf(0.2) };
        self.fsal_valid = true;
        (100.0 * h0).min(h1)
    }

    fn advance_adaptive<S: System>(&mut self, sys: &mut S, t0: f64, t1: f64, y: &mut CMatrix, tol: f64) -> Result<()> {
        let span = t1 - t0;
        if self.h <= 0.0 || !self.fsal_valid {
            let h = self.initial_step(sys, t0, y, tol);
            if self.h <= 0.0 {
                self.h = h;
            }
        }
        let mut t = t0;
        let min_step = span * 1e-14;
        let mut reached = false;
        let mut guard = 0usize;
        while !reached {
            guard += 1;
            if guard > 50_000_000 {
                return Err(Error::IntegratorAccuracy { t, detail: "step budget exhausted".into() });
            }
            let mut h = self.h.min(t1 - t);
            let last = (t + h) >= t1 - min_step;
            if last {
                h = t1 - t;
            }
            if !self.fsal_valid {
                sys.eval(t, y, &mut self.k[0]);
                self.stats.evaluations += 1;
                self.fsal_valid = true;
            }
            let err = {
                let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
                axpy_into(&mut self.tmp, y, &[(h * A21, k1)]);
                sys.eval(t + C2 * h, &self.tmp, k2);
                axpy_into(&mut self.tmp, y, &[(h * A31, k1), (h * A32, k2)]);
                sys.eval(t + C3 * h, &self.tmp, k3);
                axpy_into(&mut self.tmp, y, &[(h * A41, k1), (h * A42, k2), (h * A43, k3)]);
                sys.eval(t + C4 * h, &self.tmp, k4);
                axpy_into(&mut self.tmp, y, &[(h * A51, k1), (h * A52, k2), (h * A53, k3), (h * A54, k4)]);
                sys.eval(t + C5 * h, &self.tmp, k5);
                axpy_into(
                    &mut self.tmp,
                    y,
                    &[(h * A61, k1), (h * A62, k2), (h * A63, k3), (h * A64, k4), (h * A65, k5)],
                );
                sys.eval(t + h, &self.tmp, k6);
                axpy_into(&mut self.tmp, y, &[(h * B1, k1), (h * B3, k3), (h * B4, k4), (h * B5, k5), (h * B6, k6)]);
                sys.eval(t + h, &self.tmp, k7);
                self.stats.evaluations += 6;
                let mut err: f64 = 0.0;
                let ys = y.as_slice();
                let yn = self.tmp.as_slice();
                for i in 0..ys.len() {
                    let e = (k1.as_slice()[i] * E1
                        + k3.as_slice()[i] * E3
                        + k4.as_slice()[i] * E4
                        + k5.as_slice()[i] * E5
                        + k6.as_slice()[i] * E6
                        + k7.as_slice()[i] * E7)
                        * h;
                    let sc = tol + tol * ys[i].norm().max(yn[i].norm());
                    err = err.max(e.norm() / sc);
                }
                err
            };
            if !err.is_finite() {
                return Err(Error::IntegratorAccuracy { t, detail: "non-finite error estimate".into() });
            }
            if err <= 1.0 {
                y.copy_from(&self.tmp);
                self.k.swap(0, 6);
                t = if last { t1 } else { t + h };
                self.stats.accepted += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the pre-clipping step size for the next interval
                if !last || h >= self.h {
                    self.h = h * factor;
                }
                reached = last;
            } else {
                self.stats.rejected += 1;
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if self.h < min_step.max(1e-20) {
                    return Err(Error::IntegratorAccuracy { t, detail: format!("step size underflow (h = {:.3e})", self.h) });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// dy/dt = λ y on a 1×1 matrix.
    struct Exp(C64);
    impl System for Exp {
        fn eval(&mut self, _t: f64, y: &CMatrix, out: &mut CMatrix) {
            out[(0, 0)] = self.0 * y[(0, 0)];
        }
    }

    #[test]
    fn adaptive_matches_exponential() {
        let lambda = C64::new(-0.3, 5.0);
        let mut y = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let mut integ = Integrator::new(1, Stepper::Adaptive { tol: 1e-10 });
        let mut t = 0.0;
        for k in 1..=10 {
            let t1 = k as f64 * 0.37;
            integ.advance(&mut Exp(lambda), t, t1, &mut y).unwrap();
            t = t1;
        }
        let exact = (lambda * t).exp();
        assert!((y[(0, 0)] - exact).norm() < 1e-8, "{} vs {}", y[(0, 0)], exact);
    }

    #[test]
    fn fixed_rk4_is_fourth_order() {
        let lambda = C64::new(-1.0, 3.0);
        let exact = (lambda * 2.0).exp();
        let run = |dt: f64| {
            let mut y = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
            Integrator::new(1, Stepper::Fixed { dt }).advance(&mut Exp(lambda), 0.0, 2.0, &mut y).unwrap();
            (y[(0, 0)] - exact).norm()
        };
        let e1 = run(0.02);
        let e2 = run(0.01);
        assert!(e1 / e2 > 14.0 && e1 / e2 < 18.0, "ratio {}", e1 / e2);
    }
}
