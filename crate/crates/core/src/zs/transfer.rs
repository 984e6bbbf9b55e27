//! One-period transfer matrices of the Zakharov-Shabat system
//!
//! ```text
//! f1' = u f2 - i lambda f1
//! f2' = conj(u) f1 + i lambda f2
//! ```
//!
//! integrated by a fourth-order Magnus scheme. The potential is evaluated at
//! the Simpson nodes of each step by band-limited interpolation, so the scheme
//! is exact for constant potentials.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::{upsample, PeriodicField, C64};

/// Steps per period never drop below this.
const MIN_STEPS: usize = 1024;
/// Steps per unit of `1 + |lambda|`.
const STEPS_PER_LAMBDA: f64 = 48.0;
const MAX_LEVELS: usize = 16;

/// Fundamental matrix of the ZS system over `[0, 1]` at real `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
    pub lambda: f64,
}

impl TransferMatrix {
    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> C64 {
        self.m11 + self.m22
    }

    /// Largest violation of `m22 = conj(m11)`, `m21 = conj(m12)`.
    pub fn symmetry_defect(&self) -> f64 {
        (self.m22 - self.m11.conj())
            .norm()
            .max((self.m21 - self.m12.conj()).norm())
    }

    /// `(trace^2 - 4) / 4` evaluated without cancellation near `|trace| = 2`.
    pub fn gap_function(&self) -> f64 {
        let half_diff = (self.m11 - self.m22) * 0.5;
        (half_diff * half_diff + self.m12 * self.m21).re
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }
}

/// Per-step Simpson data: average potential and first moment.
struct Level {
    steps: usize,
    mean: Vec<C64>,
    moment: Vec<C64>,
}

/// Integrator bound to one potential; caches the refined potential samples.
pub struct ZsSolver {
    field: PeriodicField,
    levels: [OnceLock<Level>; MAX_LEVELS],
}

impl ZsSolver {
    pub fn new(field: &PeriodicField) -> Self {
        Self {
            field: field.clone(),
            levels: Default::default(),
        }
    }

    pub fn field(&self) -> &PeriodicField {
        &self.field
    }

    /// Number of Magnus steps used at this `lambda` (a power-of-two multiple of N).
    pub fn steps_for(&self, lambda: f64) -> Result<usize> {
        let n = self.field.len();
        let need = (MIN_STEPS as f64).max(STEPS_PER_LAMBDA * (1.0 + lambda.abs()));
        let mut level = 0;
        while ((n << level) as f64) < need {
            level += 1;
            if level >= MAX_LEVELS {
                return Err(Error::Resolution {
                    lambda,
                    max_steps: n << (MAX_LEVELS - 1),
                });
            }
        }
        Ok(n << level)
    }

    fn level(&self, steps: usize) -> &Level {
        let idx = (steps / self.field.len()).trailing_zeros() as usize;
        self.levels[idx].get_or_init(|| {
            let fine = upsample(&self.field, 2 * steps);
            let mut mean = Vec::with_capacity(steps);
            let mut moment = Vec::with_capacity(steps);
            for j in 0..steps {
                let p0 = fine[2 * j];
                let pm = fine[2 * j + 1];
                let p1 = fine[(2 * j + 2) % (2 * steps)];
                mean.push((p0 + 4.0 * pm + p1) / 6.0);
                moment.push((p1 - p0) / 12.0);
            }
            Level { steps, mean, moment }
        })
    }

    /// Propagator of step `j` as `[[a, b], [conj b, conj a]]`.
    #[inline]
    fn step(level: &Level, j: usize, lambda: f64, h: f64) -> (C64, C64) {
        let b = level.mean[j];
        let d = level.moment[j];
        // Omega = h B0 + h^2 [B1, B0] = [[i theta, w], [conj w, -i theta]]
        let theta = -lambda * h + 2.0 * h * h * (d * b.conj()).im;
        let w = b * h + C64::new(0.0, 2.0 * lambda * h * h) * d;
        let delta = w.norm_sqr() - theta * theta;
        let (c, sc) = if delta > 1e-8 {
            let s = delta.sqrt();
            (s.cosh(), s.sinh() / s)
        } else if delta < -1e-8 {
            let s = (-delta).sqrt();
            (s.cos(), s.sin() / s)
        } else {
            // Taylor series in delta
            (
                1.0 + delta / 2.0 + delta * delta / 24.0,
                1.0 + delta / 6.0 + delta * delta / 120.0,
            )
        };
        (C64::new(c, sc * theta), w * sc)
    }

    pub fn transfer(&self, lambda: f64) -> Result<TransferMatrix> {
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite lambda {lambda}")));
        }
        let steps = self.steps_for(lambda)?;
        let level = self.level(steps);
        let h = 1.0 / steps as f64;
        let (mut m11, mut m12, mut m21, mut m22) = (
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        );
        for j in 0..level.steps {
            let (a, b) = Self::step(level, j, lambda, h);
            let (ac, bc) = (a.conj(), b.conj());
            let n11 = a * m11 + b * m21;
            let n12 = a * m12 + b * m22;
            let n21 = bc * m11 + ac * m21;
            let n22 = bc * m12 + ac * m22;
            m11 = n11;
            m12 = n12;
            m21 = n21;
            m22 = n22;
        }
        Ok(TransferMatrix {
            m11,
            m12,
            m21,
            m22,
            lambda,
        })
    }

    /// Solution values at the grid abscissae `x_0 .. x_{N-1}` and at `x = 1`.
    pub fn propagate(&self, lambda: f64, start: [C64; 2]) -> Result<(Vec<[C64; 2]>, [C64; 2])> {
        let steps = self.steps_for(lambda)?;
        let level = self.level(steps);
        let h = 1.0 / steps as f64;
        let per_cell = steps / self.field.len();
        let mut out = Vec::with_capacity(self.field.len());
        let mut f = start;
        for j in 0..steps {
            if j % per_cell == 0 {
                out.push(f);
            }
            let (a, b) = Self::step(level, j, lambda, h);
            f = [a * f[0] + b * f[1], b.conj() * f[0] + a.conj() * f[1]];
        }
        Ok((out, f))
    }

    /// `Re trace`; fails if the imaginary part of the trace does not vanish.
    pub fn discriminant(&self, lambda: f64) -> Result<f64> {
        let m = self.transfer(lambda)?;
        check_real_trace(&m)?;
        Ok(m.trace().re)
    }

    /// Five-point derivative of the discriminant.
    pub fn discriminant_slope(&self, lambda: f64) -> Result<f64> {
        let h = slope_step(lambda);
        let f = |x: f64| self.discriminant(x);
        Ok((f(lambda - 2.0 * h)? - 8.0 * f(lambda - h)? + 8.0 * f(lambda + h)? - f(lambda + 2.0 * h)?)
            / (12.0 * h))
    }
}

pub(crate) fn slope_step(lambda: f64) -> f64 {
    1e-3 * (1.0 + lambda.abs())
}

pub(crate) fn check_real_trace(m: &TransferMatrix) -> Result<()> {
    let im = m.trace().im;
    if im.abs() > 1e-9 {
        return Err(Error::ImaginaryResidue {
            what: "discriminant",
            residue: im,
        });
    }
    Ok(())
}

pub fn transfer_matrix(u: &PeriodicField, lambda: f64) -> Result<TransferMatrix> {
    ZsSolver::new(u).transfer(lambda)
}

pub fn discriminant(u: &PeriodicField, lambda: f64) -> Result<f64> {
    ZsSolver::new(u).discriminant(lambda)
}
