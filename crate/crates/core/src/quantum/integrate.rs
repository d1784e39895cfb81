//! Dormand-Prince 5(4) with embedded error control.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub trait Elem: Copy + Send + Sync + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Elem for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Elem for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-9,
            max_steps: 1_000_000,
        }
    }
}

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

fn combine<T: Elem>(out: &mut [T], y: &[T], h: f64, terms: &[(f64, &[T])]) {
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let mut acc = T::zero();
        for &(c, k) in terms {
            if c != 0.0 {
                acc = acc + k[i] * c;
            }
        }
        *o = y[i] + acc * h;
    });
}

/// Adaptive integrator carrying its step size between calls.
pub struct Dopri5<T: Elem> {
    tol: Tolerance,
    h: Option<f64>,
    k: [Vec<T>; 7],
    tmp: Vec<T>,
    y_new: Vec<T>,
    pub steps_taken: usize,
}

impl<T: Elem> Dopri5<T> {
    pub fn new(dim: usize, tol: Tolerance) -> Self {
        let z = || vec![T::zero(); dim];
        Self {
            tol,
            h: None,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
            steps_taken: 0,
        }
    }

    /// Advances `y` from `t0` to `t1` exactly.
    pub fn integrate<F>(&mut self, f: &F, y: &mut Vec<T>, t0: f64, t1: f64) -> Result<()>
    where
        F: Fn(&[T], &mut [T]) + ?Sized,
    {
        let mut t = t0;
        if t1 <= t0 {
            return Ok(());
        }
        f(y, &mut self.k[0]);
        let mut h = self.h.unwrap_or_else(|| {
            let scale: f64 = y
                .iter()
                .zip(&self.k[0])
                .map(|(yi, ki)| ki.magnitude() / (self.tol.atol + self.tol.rtol * yi.magnitude()))
                .fold(0.0, f64::max);
            if scale > 0.0 {
                (0.01 / scale).min(t1 - t0)
            } else {
                t1 - t0
            }
        });
        let mut budget = self.tol.max_steps;
        loop {
            if budget == 0 {
                return Err(Error::Integrator(format!(
                    "step budget exhausted at t = {t:.6} (target {t1:.6})"
                )));
            }
            budget -= 1;
            let last = t + h >= t1;
            let h_try = if last { t1 - t } else { h };
            let err = self.trial(f, y, h_try);
            if !err.is_finite() {
                return Err(Error::Integrator("non-finite error estimate".into()));
            }
            if err <= 1.0 {
                std::mem::swap(y, &mut self.y_new);
                // First-same-as-last: k7 is f(y_new).
                self.k.swap(0, 6);
                self.steps_taken += 1;
                t += h_try;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if last {
                    // Keep the unclipped size for the next call.
                    self.h = Some(if h_try < h { h } else { h_try * fac });
                    return Ok(());
                }
                h = h_try * fac;
            } else {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-14 * t1.abs().max(1.0) {
                    return Err(Error::Integrator(format!("step size underflow at t = {t:.6}")));
                }
            }
        }
    }

    /// One trial step from `y` with step `h`; `k[0]` holds `f(y)`. Leaves
    /// the fifth-order solution in `y_new` and `f(y_new)` in `k[6]`.
    fn trial<F>(&mut self, f: &F, y: &[T], h: f64) -> f64
    where
        F: Fn(&[T], &mut [T]) + ?Sized,
    {
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;
        combine(tmp, y, h, &[(A21, k1)]);
        f(tmp, k2);
        combine(tmp, y, h, &[(A31, k1), (A32, k2)]);
        f(tmp, k3);
        combine(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        f(tmp, k4);
        combine(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        f(tmp, k5);
        combine(tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        f(tmp, k6);
        combine(&mut self.y_new, y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        f(&self.y_new, k7);
        let (rtol, atol) = (self.tol.rtol, self.tol.atol);
        let y_new = &self.y_new;
        let k = [&*k1, &*k3, &*k4, &*k5, &*k6, &*k7];
        let sum: f64 = (0..y.len())
            .into_par_iter()
            .map(|i| {
                let e = (k[0][i] * E1 + k[1][i] * E3 + k[2][i] * E4 + k[3][i] * E5 + k[4][i] * E6 + k[5][i] * E7) * h;
                let sc = atol + rtol * y[i].magnitude().max(y_new[i].magnitude());
                (e.magnitude() / sc).powi(2)
            })
            .sum();
        (sum / y.len().max(1) as f64).sqrt()
    }
}
