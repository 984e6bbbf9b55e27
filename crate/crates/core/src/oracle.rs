//! Independent references: a Fourier-Galerkin eigensolver for the ZS operator,
//! central differences, and the constant-potential discriminant.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::{PeriodicField, C64};
use crate::report::{ExperimentReport, Status};
use crate::zs::{BoundaryKind, Spectrum};

pub const MAX_DIMENSION: usize = 1024;

/// Eigenvalues of `H = [[i d/dx, -i u], [i conj(u), -i d/dx]]` in the basis
/// `e^{i kappa_k x}`, `kappa_k = 2 pi k` (periodic) or `pi (2k + 1)`
/// (antiperiodic), `|k| <= n_modes`. `H f = lambda f` is the ZS system.
pub fn galerkin_eigs(u: &PeriodicField, kind: BoundaryKind, n_modes: usize, window: (f64, f64)) -> Result<Vec<f64>> {
    let size = 2 * n_modes + 1;
    let dim = 2 * size;
    if dim > MAX_DIMENSION {
        return Err(Error::TooLarge(dim));
    }
    let grid = u.grid();
    let coeffs = u.coefficients();
    let half = (grid.len() / 2) as i64;
    let uhat = |m: i64| -> C64 {
        if m.abs() >= half {
            C64::new(0.0, 0.0)
        } else {
            coeffs[grid.bin(m).expect("in range")]
        }
    };
    let shift = match kind {
        BoundaryKind::Periodic => 0.0,
        BoundaryKind::Antiperiodic => 1.0,
    };
    let kappa = |k: i64| PI * (2.0 * k as f64 + shift);
    let ks: Vec<i64> = (-(n_modes as i64)..=n_modes as i64).collect();

    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for (a, &ka) in ks.iter().enumerate() {
        h[(a, a)] = C64::new(-kappa(ka), 0.0);
        h[(size + a, size + a)] = C64::new(kappa(ka), 0.0);
        for (b, &kb) in ks.iter().enumerate() {
            // (u f2)_ka = sum_kb uhat(ka - kb) f2_kb
            let c = uhat(ka - kb);
            h[(a, size + b)] = C64::new(0.0, -1.0) * c;
            h[(size + b, a)] = C64::new(0.0, 1.0) * c.conj();
        }
    }
    let eig = h.symmetric_eigen();
    let limit = kappa(n_modes as i64 - 3).abs().min(kappa(-(n_modes as i64) + 3).abs());
    let mut values: Vec<f64> = eig
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > window.0 && l < window.1)
        .collect();
    values.sort_by(f64::total_cmp);
    if let Some(&bad) = values.iter().find(|l| l.abs() > limit) {
        return Err(Error::Truncation { lambda: bad, limit });
    }
    Ok(values)
}

/// Smallest mode count satisfying `n >= 2 max|lambda| / pi + bandwidth`, plus margin
/// for the truncation-edge check.
pub fn suggested_modes(u: &PeriodicField, window: (f64, f64)) -> usize {
    let coeffs = u.coefficients();
    let grid = u.grid();
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let bandwidth = (0..grid.len())
        .filter(|&j| coeffs[j].norm() > 1e-14 * peak.max(1e-300))
        .map(|j| grid.wavenumber(j).unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let lam = window.0.abs().max(window.1.abs());
    (lam / PI).ceil() as usize + 4 * bandwidth + 24
}

/// Pairs two ascending lists one-to-one and returns the largest deviation;
/// `None` when the counts differ.
pub fn match_sorted(a: &[f64], b: &[f64]) -> Option<f64> {
    (a.len() == b.len()).then(|| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Compares a located spectrum (with multiplicity, both kinds) with the Galerkin eigenvalues.
pub fn galerkin_agreement(u: &PeriodicField, spectrum: &Spectrum, tol: f64) -> Result<ExperimentReport> {
    let window = spectrum.window;
    let n_modes = suggested_modes(u, window);
    let mut rep = ExperimentReport::new("galerkin_agreement", &["count_located", "count_galerkin", "max_deviation"]);
    rep.meta("grid_n", u.len())
        .meta("n_modes", n_modes)
        .meta("window", format!("[{}; {}]", window.0, window.1));
    for kind in [BoundaryKind::Periodic, BoundaryKind::Antiperiodic] {
        let located: Vec<f64> = spectrum
            .points
            .iter()
            .filter(|p| p.kind == kind)
            .flat_map(|p| std::iter::repeat_n(p.lambda, p.multiplicity as usize))
            .collect();
        let reference = galerkin_eigs(u, kind, n_modes, window)?;
        let dev = match_sorted(&located, &reference).unwrap_or(f64::INFINITY);
        rep.check(
            kind.as_str(),
            vec![located.len() as f64, reference.len() as f64, dev],
            dev,
            tol,
        );
    }
    if spectrum.has_ambiguous() {
        rep.mark_inconclusive();
    }
    Ok(rep)
}

/// `(F(u + eps v) - F(u - eps v)) / (2 eps)`.
pub fn fd_directional<F>(f: F, u: &PeriodicField, v: &PeriodicField, eps: f64) -> Result<f64>
where
    F: Fn(&PeriodicField) -> Result<f64>,
{
    if !(1e-7..=1e-2).contains(&eps) {
        return Err(Error::InvalidArgument(format!("step {eps} outside [1e-7, 1e-2]")));
    }
    u.check_same_grid(v)?;
    let plus = f(&u.axpy(C64::new(eps, 0.0), v))?;
    let minus = f(&u.axpy(C64::new(-eps, 0.0), v))?;
    let d = (plus - minus) / (2.0 * eps);
    if !d.is_finite() {
        return Err(Error::InvalidArgument("functional returned a non-finite value".into()));
    }
    Ok(d)
}

/// `2 cos sqrt(lambda^2 - c^2)`, continued as `2 cosh` inside `|lambda| < |c|`.
pub fn const_potential_discriminant(c: f64, lambda: f64) -> f64 {
    let k2 = lambda * lambda - c * c;
    if k2 >= 0.0 {
        2.0 * k2.sqrt().cos()
    } else {
        2.0 * (-k2).sqrt().cosh()
    }
}

/// Eigenvalues of the constant potential `u = c` in a window, with multiplicity.
pub fn const_potential_spectrum(c: f64, window: (f64, f64)) -> Vec<f64> {
    let mut out = Vec::new();
    let c = c.abs();
    let lam = window.0.abs().max(window.1.abs());
    let n_max = (lam / PI).ceil() as i64 + 1;
    for n in 0..=n_max {
        let l = (c * c + (n as f64 * PI).powi(2)).sqrt();
        let mult = if n == 0 && c > 0.0 { 1 } else { 2 };
        for v in [l, -l] {
            if v > window.0 && v < window.1 {
                out.extend(std::iter::repeat_n(v, mult));
            }
            if l == 0.0 {
                break;
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Report row helper shared by oracle comparisons.
pub fn deviation_row(rep: &mut ExperimentReport, label: &str, got: f64, expect: f64, tol: f64) {
    let dev = (got - expect).abs();
    rep.push(label, vec![got, expect, dev], tol, Status::judge(dev <= tol));
}
