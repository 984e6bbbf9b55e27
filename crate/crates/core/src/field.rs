//! Periodic fields on a uniform grid over `[0, 1)` and their spectral calculus.
//!
//! Integrals are uniform Riemann sums, which are spectrally accurate for
//! smooth periodic integrands. Derivatives act on Fourier coefficients.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_forward(buf: &mut [C64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

pub(crate) fn fft_inverse(buf: &mut [C64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// Uniform grid `x_j = j / n` on the unit period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn abscissa(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.abscissa(j))
    }

    /// Signed wavenumber of FFT bin `j`; the Nyquist bin maps to `+n/2`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn nyquist_bin(&self) -> usize {
        self.n / 2
    }

    /// FFT bin holding wavenumber `k`, if representable without aliasing.
    pub fn bin(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k.abs() >= half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
    }
}

/// Complex samples of a period-one function.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    grid: Grid,
    samples: Vec<C64>,
}

/// Which norm to evaluate; see [`PeriodicField::norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L2,
    Sobolev(u32),
    Lp(f64),
    Sup,
}

impl PeriodicField {
    pub fn make<F>(grid: Grid, generator: F) -> Result<Self>
    where
        F: Fn(f64) -> C64,
    {
        let samples: Vec<C64> = grid.abscissae().map(generator).collect();
        Self::from_samples(grid, samples)
    }

    pub fn from_samples(grid: Grid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a {}-point grid",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(index) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            samples: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: C64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.len()],
        }
    }

    /// Sum of `c * exp(2 pi i k x)` over the given modes.
    pub fn from_modes(grid: Grid, modes: &[(i64, C64)]) -> Result<Self> {
        let mut coeffs = vec![C64::new(0.0, 0.0); grid.len()];
        for &(k, c) in modes {
            let bin = grid.bin(k).ok_or_else(|| {
                Error::InvalidArgument(format!("mode {k} not resolved on {} points", grid.len()))
            })?;
            coeffs[bin] += c;
        }
        Self::from_coefficients(grid, coeffs)
    }

    /// Inverse of [`coefficients`](Self::coefficients).
    pub fn from_coefficients(grid: Grid, mut coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument("coefficient count differs from grid".into()));
        }
        fft_inverse(&mut coeffs);
        Self::from_samples(grid, coeffs)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fourier coefficients `c_k = (1/N) sum_j u_j exp(-2 pi i k j / N)`, in FFT bin order.
    pub fn coefficients(&self) -> Vec<C64> {
        let mut buf = self.samples.clone();
        fft_forward(&mut buf);
        let scale = 1.0 / self.grid.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.len(),
                right: other.grid.len(),
            });
        }
        Ok(())
    }

    pub fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_map<F: Fn(C64, C64) -> C64>(&self, other: &Self, f: F) -> Self {
        assert_eq!(self.grid, other.grid, "fields on different grids");
        Self {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    /// Pointwise product.
    pub fn pointwise(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn abs_sq(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `D^order u`, the Nyquist mode being dropped for odd orders.
    pub fn derivative(&self, order: u32) -> Self {
        if order == 0 {
            return self.clone();
        }
        let n = self.grid.len();
        let mut buf = self.samples.clone();
        fft_forward(&mut buf);
        let scale = 1.0 / n as f64;
        for (j, c) in buf.iter_mut().enumerate() {
            if order % 2 == 1 && j == self.grid.nyquist_bin() {
                *c = C64::new(0.0, 0.0);
                continue;
            }
            let ik = C64::new(0.0, 2.0 * PI * self.grid.wavenumber(j) as f64);
            *c *= ik.powu(order) * scale;
        }
        fft_inverse(&mut buf);
        Self {
            grid: self.grid,
            samples: buf,
        }
    }

    /// Exact translation `u(x - shift)` through Fourier phases.
    pub fn translate(&self, shift: f64) -> Self {
        let mut buf = self.coefficients();
        for (j, c) in buf.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j) as f64;
            if j == self.grid.nyquist_bin() {
                // Keep the Nyquist mode real-symmetric: cos part only.
                *c *= (2.0 * PI * k * shift).cos();
            } else {
                *c *= C64::from_polar(1.0, -2.0 * PI * k * shift);
            }
        }
        fft_inverse(&mut buf);
        Self {
            grid: self.grid,
            samples: buf,
        }
    }

    /// `int_0^1 u dx`.
    pub fn integral(&self) -> C64 {
        self.samples.iter().sum::<C64>() / self.grid.len() as f64
    }

    /// Primitive `int_0^x u dy` sampled on the grid (spectral).
    pub fn primitive(&self) -> Self {
        let coeffs = self.coefficients();
        let mean = coeffs[0];
        let mut periodic = coeffs.clone();
        periodic[0] = C64::new(0.0, 0.0);
        let nyq = self.grid.nyquist_bin();
        periodic[nyq] = C64::new(0.0, 0.0);
        for (j, c) in periodic.iter_mut().enumerate().skip(1) {
            if j == nyq {
                continue;
            }
            *c /= C64::new(0.0, 2.0 * PI * self.grid.wavenumber(j) as f64);
        }
        let mut buf = periodic;
        fft_inverse(&mut buf);
        let offset = buf[0];
        let samples = buf
            .iter()
            .zip(self.grid.abscissae())
            .map(|(&p, x)| p - offset + mean * x)
            .collect();
        Self {
            grid: self.grid,
            samples,
        }
    }

    /// Largest coefficient magnitude among the top `fraction` of wavenumbers, relative to the peak.
    pub fn spectral_tail(&self, fraction: f64) -> f64 {
        let coeffs = self.coefficients();
        let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let cutoff = ((1.0 - fraction) * (self.grid.len() / 2) as f64) as i64;
        coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.wavenumber(*j).abs() > cutoff)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
            / peak
    }

    pub fn norm(&self, which: Norm) -> Result<f64> {
        match which {
            Norm::L2 => Ok(self.l2()),
            Norm::Sobolev(n) => {
                let total: f64 = (0..=n).map(|j| self.derivative(j).l2().powi(2)).sum();
                Ok(total.sqrt())
            }
            Norm::Lp(p) => {
                if !(p >= 1.0) {
                    return Err(Error::InvalidArgument(format!("L^p norm needs p >= 1, got {p}")));
                }
                if p.is_infinite() {
                    return Ok(self.sup());
                }
                let mean =
                    self.samples.iter().map(|z| z.norm().powf(p)).sum::<f64>() / self.len() as f64;
                Ok(mean.powf(1.0 / p))
            }
            Norm::Sup => Ok(self.sup()),
        }
    }

    pub fn l2(&self) -> f64 {
        (self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64).sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Add for &PeriodicField {
    type Output = PeriodicField;
    fn add(self, rhs: Self) -> PeriodicField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &PeriodicField {
    type Output = PeriodicField;
    fn sub(self, rhs: Self) -> PeriodicField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &PeriodicField {
    type Output = PeriodicField;
    fn neg(self) -> PeriodicField {
        self.map(|z| -z)
    }
}

impl Mul<f64> for &PeriodicField {
    type Output = PeriodicField;
    fn mul(self, rhs: f64) -> PeriodicField {
        self.map(|z| z * rhs)
    }
}

impl Mul<C64> for &PeriodicField {
    type Output = PeriodicField;
    fn mul(self, rhs: C64) -> PeriodicField {
        self.map(|z| z * rhs)
    }
}

/// `<u, v> = int (u conj(v) + v conj(u)) dx`.
pub fn real_pairing(u: &PeriodicField, v: &PeriodicField) -> Result<f64> {
    u.check_same_grid(v)?;
    let sum: C64 = u
        .samples
        .iter()
        .zip(&v.samples)
        .map(|(&a, &b)| a * b.conj() + b * a.conj())
        .sum();
    let value = sum / u.len() as f64;
    let scale = 1.0 + value.re.abs();
    if value.im.abs() > 1e-12 * scale {
        return Err(Error::ImaginaryResidue {
            what: "real pairing",
            residue: value.im,
        });
    }
    Ok(value.re)
}

/// Both sides of the Gagliardo-Nirenberg inequality
/// `|D^j w|_p <= 2^((p-2)/(2p)) |D^k w|^a |w|^(1-a)`, `a = (j + 1/2 - 1/p) / k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub exponent: f64,
    pub constant: f64,
    pub mean_zero: bool,
    /// `|u|_inf^2 <= |u|^2 + 2 |u| |u_x|`, which also holds for fields with nonzero mean.
    pub constant_safe: Option<(f64, f64)>,
}

impl InterpolationReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12) + 1e-14
    }
}

/// `p = f64::INFINITY` selects the sup norm; `(j, k, p) = (0, 1, inf)` and `(0, 1, 6)` are the
/// two special cases used in the a priori bounds.
pub fn interpolation_report(u: &PeriodicField, j: u32, k: u32, p: f64) -> Result<InterpolationReport> {
    if j >= k {
        return Err(Error::InvalidArgument(format!("need j < k, got j = {j}, k = {k}")));
    }
    if !(p >= 2.0) {
        return Err(Error::InvalidArgument(format!("need p >= 2, got {p}")));
    }
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let exponent = (j as f64 + 0.5 - inv_p) / k as f64;
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::ExponentOutOfRange(exponent));
    }
    let constant = 2f64.powf(0.5 - inv_p);
    let dj = u.derivative(j);
    let lhs = dj.norm(Norm::Lp(p))?;
    let dk = u.derivative(k).l2();
    let base = u.l2();
    let rhs = constant * dk.powf(exponent) * base.powf(1.0 - exponent);
    let mean = u.integral();
    let mean_zero = mean.norm() <= 1e-12 * (1.0 + u.sup());
    let constant_safe = (j == 0 && k == 1 && p.is_infinite()).then(|| {
        let ux = u.derivative(1).l2();
        (u.sup().powi(2), base * base + 2.0 * base * ux)
    });
    Ok(InterpolationReport {
        lhs,
        rhs,
        exponent,
        constant,
        mean_zero,
        constant_safe,
    })
}

/// Band-limited interpolation of `u` onto a uniform grid of `m >= n` points.
pub(crate) fn upsample(u: &PeriodicField, m: usize) -> Vec<C64> {
    let n = u.len();
    assert!(m >= n && m.is_multiple_of(2));
    let coeffs = u.coefficients();
    let mut fine = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    for (j, &c) in coeffs.iter().enumerate() {
        if j == half {
            // Split the Nyquist mode between +n/2 and -n/2.
            fine[half] += 0.5 * c;
            fine[m - half] += 0.5 * c;
        } else if j < half {
            fine[j] = c;
        } else {
            fine[m - (n - j)] = c;
        }
    }
    fft_inverse(&mut fine);
    fine
}
