//! Spectral gaps: consecutive eigenvalues of the same Floquet kind, labelled by
//! the free double point `n pi` they bifurcate from.

use std::f64::consts::PI;

use super::eigen::EigenPair;
use super::spectrum::{BoundaryKind, Classification, SpectralPoint, Spectrum};
use super::transfer::ZsSolver;
use crate::error::{Error, Result};
use crate::field::{PeriodicField, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    /// Label of the free double point `n pi`.
    pub n: i64,
    pub lower: SpectralPoint,
    pub upper: SpectralPoint,
}

impl Gap {
    pub fn kind(&self) -> BoundaryKind {
        self.lower.kind
    }

    pub fn width(&self) -> f64 {
        self.upper.lambda - self.lower.lambda
    }

    pub fn is_open(&self) -> bool {
        self.lower.is_simple() && self.upper.is_simple()
    }

    pub fn free_point(&self) -> f64 {
        self.n as f64 * PI
    }
}

/// Groups the spectrum (with multiplicity) into gaps. An unmatched point at
/// either end of the window is dropped; anywhere else it is an error.
pub fn gaps(spectrum: &Spectrum) -> Result<Vec<Gap>> {
    let entries: Vec<SpectralPoint> = spectrum
        .points
        .iter()
        .flat_map(|p| std::iter::repeat_n(*p, p.multiplicity as usize))
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let a = entries[i];
        match entries.get(i + 1) {
            Some(b) if b.kind == a.kind => {
                let mid = 0.5 * (a.lambda + b.lambda);
                let n = (mid / PI).round() as i64;
                let parity = if n.rem_euclid(2) == 0 {
                    BoundaryKind::Periodic
                } else {
                    BoundaryKind::Antiperiodic
                };
                if parity != a.kind {
                    return Err(Error::InvalidArgument(format!(
                        "gap at {mid} has {} edges but sits nearest {n} pi",
                        a.kind.as_str()
                    )));
                }
                out.push(Gap { n, lower: a, upper: *b });
                i += 2;
            }
            _ if i == 0 || i + 1 == entries.len() => i += 1,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unpaired {} eigenvalue at {}",
                    a.kind.as_str(),
                    a.lambda
                )))
            }
        }
    }
    Ok(out)
}

/// `F` for one gap: edge displacements from the free double point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub n: i64,
    pub lower: f64,
    pub upper: f64,
}

impl Deviation {
    pub fn squared(&self) -> f64 {
        self.lower * self.lower + self.upper * self.upper
    }
}

/// Deviations of `spec_u` from `spec_0` gap by gap, with the edges of each gap
/// matched as order statistics. Gaps present in only one spectrum are skipped.
pub fn spectral_deviation(spec_u: &Spectrum, spec_0: &Spectrum) -> Result<Vec<Deviation>> {
    if spec_u.window != spec_0.window {
        return Err(Error::WindowMismatch);
    }
    let reference = gaps(spec_0)?;
    let mut out: Vec<Deviation> = gaps(spec_u)?
        .into_iter()
        .filter_map(|g| {
            let r = reference.iter().find(|r| r.n == g.n)?;
            Some(Deviation {
                n: g.n,
                lower: g.lower.lambda - r.lower.lambda,
                upper: g.upper.lambda - r.upper.lambda,
            })
        })
        .collect();
    out.sort_by_key(|d| (d.n.abs(), d.n));
    Ok(out)
}

/// Running sums of `F^2` ordered by `|n|`, one entry per distinct `|n|`.
pub fn partial_sums(deviations: &[Deviation]) -> Vec<(i64, f64)> {
    let mut out: Vec<(i64, f64)> = Vec::new();
    let mut total = 0.0;
    for d in deviations {
        total += d.squared();
        match out.last_mut() {
            Some(last) if last.0 == d.n.abs() => last.1 = total,
            _ => out.push((d.n.abs(), total)),
        }
    }
    out
}

/// `e^{-2 i n pi x}`: the square of the first eigenfunction component at the free
/// double point `n pi`, up to a phase.
pub fn free_square(like: &PeriodicField, n: i64) -> PeriodicField {
    PeriodicField::make(like.grid(), |x| C64::from_polar(1.0, -2.0 * PI * n as f64 * x)).expect("finite")
}

impl ZsSolver {
    /// One eigenfunction per gap. Open gaps use the upper edge, as do unresolved
    /// gaps whose edge still carries a one-dimensional Floquet eigenspace. Closed
    /// gaps use the conjugation-symmetric solution whose `f1^2` is best aligned
    /// with `e^{-2 i n pi x}`.
    pub fn gap_representative(&self, gap: &Gap) -> Result<EigenPair> {
        if gap.upper.is_simple() {
            return self.eigenpair(&gap.upper);
        }
        if gap.upper.multiplicity == 1 {
            if let Ok(pair) = self.floquet_solution(&gap.upper) {
                return Ok(pair);
            }
        }
        let mut point = gap.upper;
        point.lambda = 0.5 * (gap.lower.lambda + gap.upper.lambda);
        point.classification = Classification::Double;
        let grid = self.field().grid();
        let basis = |start: [C64; 2]| -> Result<Vec<C64>> {
            let (path, _) = self.propagate(point.lambda, start)?;
            Ok(path.iter().map(|v| v[0]).collect())
        };
        let phi = basis([C64::new(1.0, 0.0), C64::new(0.0, 0.0)])?;
        let psi = basis([C64::new(0.0, 0.0), C64::new(1.0, 0.0)])?;
        let target = free_square(self.field(), gap.n);
        // f1 = a phi + conj(a) psi with |a| = 1; Re <f1^2, g> depends on a only
        // through a^2 (A + conj(C))
        let (mut a_coef, mut c_coef) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for j in 0..grid.len() {
            let g = target.samples()[j].conj();
            a_coef += phi[j] * phi[j] * g;
            c_coef += psi[j] * psi[j] * g;
        }
        let theta = -0.5 * (a_coef + c_coef.conj()).arg();
        let a = C64::from_polar(1.0, theta);
        let pair = self.normalized_solution(&point, [a, a.conj()])?;
        if !(pair.residual < super::eigen::RESIDUAL_TOL) {
            return Err(Error::Residual {
                lambda: point.lambda,
                residual: pair.residual,
                tolerance: super::eigen::RESIDUAL_TOL,
            });
        }
        Ok(pair)
    }
}
