//! Normalized eigenfunctions, eigenvalue gradients and the pointwise identities
//! satisfied by products of eigenfunction components.

use std::f64::consts::PI;

use super::spectrum::{BoundaryKind, SpectralPoint};
use super::transfer::ZsSolver;
use crate::error::{Error, Result};
use crate::field::{real_pairing, Grid, PeriodicField, C64, I};
use crate::report::{ExperimentReport, Status};

pub const RESIDUAL_TOL: f64 = 1e-6;

/// Eigenfunction `(f1, f2)` sampled on the grid, with `|f1| = |f2| = 1` in L2 and
/// `f2 = conj(f1)`. Components satisfy `f(x + 1) = m f(x)`, so they are stored as
/// raw samples; their squares and products are periodic fields.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub point: SpectralPoint,
    pub grid: Grid,
    pub f1: Vec<C64>,
    pub f2: Vec<C64>,
    /// L2 norm of `f' - A(x; lambda) f`.
    pub residual: f64,
}

fn field(grid: Grid, samples: Vec<C64>) -> PeriodicField {
    PeriodicField::from_samples(grid, samples).expect("finite eigenfunction samples")
}

impl EigenPair {
    pub fn f1_squared(&self) -> PeriodicField {
        field(self.grid, self.f1.iter().map(|z| z * z).collect())
    }

    pub fn f2_squared(&self) -> PeriodicField {
        field(self.grid, self.f2.iter().map(|z| z * z).collect())
    }

    pub fn f1f2(&self) -> PeriodicField {
        field(self.grid, self.f1.iter().zip(&self.f2).map(|(a, b)| a * b).collect())
    }

    pub fn norms(&self) -> (f64, f64) {
        (l2(&self.f1), l2(&self.f2))
    }

    /// `sup |f2 - conj(f1)|`.
    pub fn conjugation_defect(&self) -> f64 {
        self.f1
            .iter()
            .zip(&self.f2)
            .map(|(a, b)| (b - a.conj()).norm())
            .fold(0.0, f64::max)
    }
}

fn l2(v: &[C64]) -> f64 {
    (v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64).sqrt()
}

/// Spectral derivative of a periodic or antiperiodic sample vector.
pub(crate) fn twisted_derivative(grid: Grid, samples: &[C64], kind: BoundaryKind) -> Vec<C64> {
    match kind {
        BoundaryKind::Periodic => field(grid, samples.to_vec()).derivative(1).into_samples(),
        BoundaryKind::Antiperiodic => {
            let twist: Vec<C64> = grid.abscissae().map(|x| C64::from_polar(1.0, PI * x)).collect();
            let g = field(grid, samples.iter().zip(&twist).map(|(f, t)| f * t).collect());
            let dg = g.derivative(1);
            dg.samples()
                .iter()
                .zip(g.samples())
                .zip(&twist)
                .map(|((d, g), t)| (d - I * PI * g) / t)
                .collect()
        }
    }
}

fn ode_residual(u: &PeriodicField, lambda: f64, kind: BoundaryKind, f1: &[C64], f2: &[C64]) -> f64 {
    let grid = u.grid();
    let d1 = twisted_derivative(grid, f1, kind);
    let d2 = twisted_derivative(grid, f2, kind);
    let il = C64::new(0.0, lambda);
    let sum: f64 = (0..grid.len())
        .map(|j| {
            let q = u.samples()[j];
            let r1 = d1[j] - (q * f2[j] - il * f1[j]);
            let r2 = d2[j] - (q.conj() * f1[j] + il * f2[j]);
            r1.norm_sqr() + r2.norm_sqr()
        })
        .sum();
    (sum / grid.len() as f64).sqrt()
}

impl ZsSolver {
    /// Integrates from `start`, rotates the phase so that `f2 = conj(f1)` and scales to
    /// `|f1| = 1`. Meaningful when `start` spans a Floquet eigenspace.
    pub fn normalized_solution(&self, point: &SpectralPoint, start: [C64; 2]) -> Result<EigenPair> {
        let (path, _) = self.propagate(point.lambda, start)?;
        let mut f1: Vec<C64> = path.iter().map(|v| v[0]).collect();
        let mut f2: Vec<C64> = path.iter().map(|v| v[1]).collect();
        // the antilinear map (f1, f2) -> (conj f2, conj f1) acts on the eigenspace
        // as multiplication by c with |c| = 1
        let n = f1.len() as f64;
        let cross: C64 = f1.iter().zip(&f2).map(|(a, b)| (a * b).conj()).sum::<C64>() * (2.0 / n);
        let total = l2(&f1).powi(2) + l2(&f2).powi(2);
        let c = cross / total;
        let rot = C64::from_polar(1.0, 0.5 * c.arg());
        let scale = 1.0 / (l2(&f1) * rot.norm());
        for z in f1.iter_mut().chain(f2.iter_mut()) {
            *z *= rot * scale;
        }
        let residual = ode_residual(self.field(), point.lambda, point.kind, &f1, &f2);
        Ok(EigenPair {
            point: *point,
            grid: self.field().grid(),
            f1,
            f2,
            residual,
        })
    }

    pub fn eigenpair(&self, point: &SpectralPoint) -> Result<EigenPair> {
        if !point.is_simple() {
            return Err(Error::DoublePoint(point.lambda));
        }
        self.floquet_solution(point)
    }

    /// Solution started from the kernel of `M - m I`, without the simplicity check.
    /// Fails with a residual error when the kernel is not one-dimensional enough
    /// to give an eigenfunction.
    pub(crate) fn floquet_solution(&self, point: &SpectralPoint) -> Result<EigenPair> {
        let m = self.transfer(point.lambda)?;
        let rho = C64::new(point.kind.multiplier(), 0.0);
        // kernel of M - rho I from whichever row is better conditioned
        let a = [m.m12, rho - m.m11];
        let b = [rho - m.m22, m.m21];
        let norm = |v: &[C64; 2]| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let v = if norm(&a) >= norm(&b) { a } else { b };
        let nv = norm(&v);
        if nv == 0.0 {
            return Err(Error::DoublePoint(point.lambda));
        }
        let v = [v[0] / nv, v[1] / nv];
        let pair = self.normalized_solution(point, v)?;
        if !(pair.residual < RESIDUAL_TOL) {
            return Err(Error::Residual {
                lambda: point.lambda,
                residual: pair.residual,
                tolerance: RESIDUAL_TOL,
            });
        }
        Ok(pair)
    }
}

pub fn eigenpair(u: &PeriodicField, point: &SpectralPoint) -> Result<EigenPair> {
    ZsSolver::new(u).eigenpair(point)
}

/// Normal vector `G = i f1^2` and tangent vector `K = -f2^2` of an eigenvalue.
///
/// With `|f1| = |f2| = 1` the first variation under `u -> u + eps v` is
/// `d lambda / d eps = <G, v> / 2`; see [`gradient_pairing`].
pub fn lambda_gradient(pair: &EigenPair) -> (PeriodicField, PeriodicField) {
    let g = pair.f1_squared().scale(I);
    let k = pair.f2_squared().scale(C64::new(-1.0, 0.0));
    (g, k)
}

/// `<G, v> / (|f1|^2 + |f2|^2)`: the predicted directional derivative of the eigenvalue.
pub fn gradient_pairing(pair: &EigenPair, v: &PeriodicField) -> Result<f64> {
    let (g, _) = lambda_gradient(pair);
    let (n1, n2) = pair.norms();
    Ok(real_pairing(&g, v)? / (n1 * n1 + n2 * n2))
}

/// Pointwise residuals of the first-order identities for `f1^2`, `f2^2`, `f1 f2`
/// and of the integrated form carrying the constant `f1 f2 (0)`.
pub fn product_identity_check(pair: &EigenPair, u: &PeriodicField) -> Result<ExperimentReport> {
    pair.f1_squared().check_same_grid(u)?;
    let lambda = pair.point.lambda;
    let il = C64::new(0.0, lambda);
    let f1s = pair.f1_squared();
    let f2s = pair.f2_squared();
    let f12 = pair.f1f2();
    let ubar = u.conj();
    let tol = 1e-6;

    let mut rep = ExperimentReport::new("product_identities", &["lambda", "residual_sup"]);
    rep.meta("grid_n", u.len()).meta("lambda", lambda);

    let lhs1 = f1s.derivative(1).scale(C64::new(0.5, 0.0));
    let rhs1 = &u.pointwise(&f12) - &f1s.scale(il);
    let r1 = (&lhs1 - &rhs1).sup();
    rep.check("half_dx_f1_sq", vec![lambda, r1], r1, tol);

    let lhs2 = &f2s.derivative(1).scale(C64::new(0.5, 0.0)) - &ubar.pointwise(&f12);
    let r2 = (&lhs2 - &f2s.scale(il)).sup();
    rep.check("half_dx_f2_sq", vec![lambda, r2], r2, tol);

    let source = &u.pointwise(&f2s) + &ubar.pointwise(&f1s);
    let r3 = (&f12.derivative(1) - &source).sup();
    rep.check("dx_f1f2", vec![lambda, r3], r3, tol);

    let c0 = f12.samples()[0];
    let integral = source.primitive().map(|z| z + c0);
    let eq7 = &(&u.pointwise(&integral) - &lhs1) - &f1s.scale(il);
    let r4 = eq7.sup();
    rep.check("integrated_f1_sq", vec![lambda, r4], r4, tol);
    let eq7b = &(&lhs2.map(|z| z) + &ubar.pointwise(&f12)) - &ubar.pointwise(&integral);
    let r5 = (&eq7b - &f2s.scale(il)).sup();
    rep.check("integrated_f2_sq", vec![lambda, r5], r5, tol);
    rep.info("f1f2_at_origin_re_im", vec![c0.re, c0.im]);

    // uniform bound exp(|u|_inf) from d|f1|^2/dx <= 2 |u| |f1|^2 and mean |f1|^2 = 1
    let bound = u.sup().exp();
    let sup = f1s.sup();
    rep.push(
        "sup_f1_sq",
        vec![lambda, sup],
        bound,
        Status::judge(sup <= bound * (1.0 + 1e-9)),
    );
    Ok(rep)
}
