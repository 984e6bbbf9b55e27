//! Periodic and antiperiodic spectrum on a real window.
//!
//! The discriminant is scanned on a fine grid. Its critical points are found
//! first; between consecutive critical points it is monotone, so each of the
//! levels `+2` and `-2` has at most one root there. A critical point at which
//! the gap function vanishes is a double eigenvalue.

use rayon::prelude::*;

use super::transfer::{check_real_trace, TransferMatrix, ZsSolver};
use crate::error::{Error, Result};
use crate::field::PeriodicField;
use crate::roots::{golden_max, illinois, newton_bracketed};
use crate::report::{ExperimentReport, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryKind {
    Periodic,
    Antiperiodic,
}

impl BoundaryKind {
    /// Floquet multiplier `f(x + 1) = m f(x)`.
    pub fn multiplier(self) -> f64 {
        match self {
            BoundaryKind::Periodic => 1.0,
            BoundaryKind::Antiperiodic => -1.0,
        }
    }

    pub fn level(self) -> f64 {
        2.0 * self.multiplier()
    }

    pub fn of_discriminant(disc: f64) -> Self {
        if disc >= 0.0 {
            BoundaryKind::Periodic
        } else {
            BoundaryKind::Antiperiodic
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::Periodic => "periodic",
            BoundaryKind::Antiperiodic => "antiperiodic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Simple,
    Double,
    /// Root whose slope is below the classification threshold, or a tangency
    /// that could not be resolved; never used as a simple eigenvalue.
    Ambiguous,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Simple => "simple",
            Classification::Double => "double",
            Classification::Ambiguous => "ambiguous",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub kind: BoundaryKind,
    pub classification: Classification,
    /// Discriminant derivative at `lambda`.
    pub disc_slope: f64,
    /// 1 for a root of `disc -/+ 2`, 2 for a point located as a tangency.
    pub multiplicity: u8,
    /// Signed position; 0 is the point nearest `lambda = 0`.
    pub index: i64,
}

impl SpectralPoint {
    pub fn is_simple(&self) -> bool {
        self.classification == Classification::Simple
    }
}

/// `|disc'| > slope_threshold` classifies a root as simple.
pub fn slope_threshold(lambda: f64) -> f64 {
    1e-4 * (1.0 + lambda.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub points: Vec<SpectralPoint>,
    pub window: (f64, f64),
}

impl Spectrum {
    pub fn by_index(&self, index: i64) -> Option<&SpectralPoint> {
        self.points.iter().find(|p| p.index == index)
    }

    pub fn simple_points(&self) -> impl Iterator<Item = &SpectralPoint> {
        self.points.iter().filter(|p| p.is_simple())
    }

    pub fn has_ambiguous(&self) -> bool {
        self.points
            .iter()
            .any(|p| p.classification == Classification::Ambiguous)
    }

    /// Eigenvalues repeated by multiplicity, ascending.
    pub fn with_multiplicity(&self) -> Vec<f64> {
        self.points
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.lambda, p.multiplicity as usize))
            .collect()
    }

    pub fn count_with_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity as usize).sum()
    }

    /// Half the distance from point `i` to its nearest neighbour (or to the window edge).
    pub fn guard(&self, i: usize) -> f64 {
        let p = self.points[i].lambda;
        let mut d = (p - self.window.0).min(self.window.1 - p);
        if i > 0 {
            d = d.min(p - self.points[i - 1].lambda);
        }
        if i + 1 < self.points.len() {
            d = d.min(self.points[i + 1].lambda - p);
        }
        0.5 * d
    }

    /// One row per point: index, eigenvalue, Floquet multiplier, multiplicity
    /// and discriminant slope. Ambiguous points are inconclusive rows.
    pub fn report(&self) -> ExperimentReport {
        let mut rep = ExperimentReport::new("spectrum", &["index", "lambda", "multiplier", "multiplicity", "disc_slope"]);
        rep.meta("window", format!("[{}; {}]", self.window.0, self.window.1))
            .meta("points", self.points.len());
        for p in &self.points {
            let values = vec![
                p.index as f64,
                p.lambda,
                p.kind.multiplier(),
                p.multiplicity as f64,
                p.disc_slope,
            ];
            let label = format!("{}_{}", p.classification.as_str(), p.index);
            match p.classification {
                Classification::Ambiguous => rep.push(label, values, f64::NAN, Status::Inconclusive),
                _ => rep.info(label, values),
            }
        }
        rep
    }

    pub fn position(&self, index: i64) -> Option<usize> {
        self.points.iter().position(|p| p.index == index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    /// Scan spacing (at most 0.1).
    pub scan_step: f64,
    /// `|gap function|` at a critical point below which the gap is closed.
    pub tangency_tol: f64,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            scan_step: 0.05,
            tangency_tol: 1e-20,
        }
    }
}

/// `disc - level`, evaluated through the gap function near the level.
fn level_offset(m: &TransferMatrix, level: f64) -> f64 {
    let d = m.trace().re;
    if (d - level).abs() < 0.5 {
        4.0 * m.gap_function() / (d + level)
    } else {
        d - level
    }
}

#[derive(Debug, Clone, Copy)]
struct Critical {
    lambda: f64,
    disc: f64,
    gap: f64,
}

impl ZsSolver {
    pub fn level_offset(&self, lambda: f64, kind: BoundaryKind) -> Result<f64> {
        let m = self.transfer(lambda)?;
        check_real_trace(&m)?;
        Ok(level_offset(&m, kind.level()))
    }

    fn refine_critical(&self, a: f64, b: f64, is_max: bool) -> Result<f64> {
        let slope = |x: f64| self.discriminant_slope(x);
        let (sa, sb) = (slope(a)?, slope(b)?);
        let xtol = 1e-13 * (1.0 + a.abs().max(b.abs()));
        if sa * sb < 0.0 {
            return illinois(slope, a, b, xtol, 200);
        }
        let sign = if is_max { 1.0 } else { -1.0 };
        let x = golden_max(|x| self.discriminant(x).map(|d| sign * d), a, b, 1e-7 * (1.0 + a.abs()))?;
        let w = 1e-5 * (1.0 + x.abs());
        let (lo, hi) = ((x - w).max(a), (x + w).min(b));
        if slope(lo)? * slope(hi)? < 0.0 {
            illinois(slope, lo, hi, xtol, 200)
        } else {
            Ok(x)
        }
    }

    pub fn locate(&self, window: (f64, f64), opts: LocateOptions) -> Result<Spectrum> {
        let (lo, hi) = window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad window [{lo}, {hi}]")));
        }
        if !(opts.scan_step > 0.0 && opts.scan_step <= 0.1) {
            return Err(Error::InvalidArgument("scan step must lie in (0, 0.1]".into()));
        }
        for end in [lo, hi] {
            let m = self.transfer(end)?;
            check_real_trace(&m)?;
            let d = m.trace().re;
            let off = level_offset(&m, 2.0 * d.signum());
            if off.abs() < 1e-8 {
                return Err(Error::EndpointOnSpectrum { lambda: end, gap: off });
            }
        }

        let cells = ((hi - lo) / opts.scan_step).ceil() as usize;
        let nodes: Vec<f64> = (0..=cells)
            .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
            .collect();
        let values = nodes
            .par_iter()
            .map(|&x| self.discriminant(x))
            .collect::<Result<Vec<f64>>>()?;

        // slope sequence: derivative at lo, cell secants, derivative at hi
        let mut slopes = Vec::with_capacity(cells + 2);
        let mut spans = Vec::with_capacity(cells + 2);
        slopes.push(self.discriminant_slope(lo)?);
        spans.push((lo, lo));
        for i in 0..cells {
            slopes.push(values[i + 1] - values[i]);
            spans.push((nodes[i], nodes[i + 1]));
        }
        slopes.push(self.discriminant_slope(hi)?);
        spans.push((hi, hi));

        // sign changes between consecutive nonzero slopes; an exactly flat
        // secant (symmetric discriminant, extremum at a cell midpoint) is skipped
        let nonzero: Vec<usize> = (0..slopes.len()).filter(|&e| slopes[e] != 0.0).collect();
        let brackets: Vec<(f64, f64, bool)> = nonzero
            .windows(2)
            .filter(|w| slopes[w[0]] * slopes[w[1]] < 0.0)
            .map(|w| (spans[w[0]].0, spans[w[1]].1, slopes[w[0]] > 0.0))
            .collect();
        let mut crit_lambdas = brackets
            .par_iter()
            .map(|&(a, b, is_max)| self.refine_critical(a, b, is_max))
            .collect::<Result<Vec<f64>>>()?;
        crit_lambdas.sort_by(|a, b| a.total_cmp(b));
        crit_lambdas.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

        let criticals = crit_lambdas
            .iter()
            .map(|&x| {
                let m = self.transfer(x)?;
                check_real_trace(&m)?;
                Ok(Critical {
                    lambda: x,
                    disc: m.trace().re,
                    gap: m.gap_function(),
                })
            })
            .collect::<Result<Vec<Critical>>>()?;

        let mut points = Vec::new();
        let mut closed = vec![false; criticals.len()];
        for (c, is_closed) in criticals.iter().zip(closed.iter_mut()) {
            if c.lambda <= lo || c.lambda >= hi {
                continue;
            }
            let kind = BoundaryKind::of_discriminant(c.disc);
            let classification = if c.gap.abs() <= opts.tangency_tol {
                Classification::Double
            } else if c.gap < 0.0 && c.disc.abs() > 2.0 - 1e-6 {
                // touches the level within tolerance but no resolvable gap
                Classification::Ambiguous
            } else {
                continue;
            };
            *is_closed = true;
            points.push(SpectralPoint {
                lambda: c.lambda,
                kind,
                classification,
                disc_slope: self.discriminant_slope(c.lambda)?,
                multiplicity: 2,
                index: 0,
            });
        }

        // monotone segments between critical points
        let mut bounds: Vec<(f64, Option<usize>)> = vec![(lo, None)];
        bounds.extend(
            criticals
                .iter()
                .enumerate()
                .filter(|(_, c)| c.lambda > lo && c.lambda < hi)
                .map(|(i, c)| (c.lambda, Some(i))),
        );
        bounds.push((hi, None));
        let mut tasks = Vec::new();
        for w in bounds.windows(2) {
            let ((a, ca), (b, cb)) = (w[0], w[1]);
            for kind in [BoundaryKind::Periodic, BoundaryKind::Antiperiodic] {
                let touches = |c: Option<usize>| {
                    c.is_some_and(|i| {
                        closed[i] && BoundaryKind::of_discriminant(criticals[i].disc) == kind
                    })
                };
                if touches(ca) || touches(cb) {
                    continue;
                }
                tasks.push((a, b, kind));
            }
        }
        let roots = tasks
            .par_iter()
            .map(|&(a, b, kind)| self.edge_in(a, b, kind))
            .collect::<Result<Vec<Option<SpectralPoint>>>>()?;
        points.extend(roots.into_iter().flatten());

        points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        assign_indices(&mut points);
        Ok(Spectrum { points, window })
    }

    fn edge_in(&self, a: f64, b: f64, kind: BoundaryKind) -> Result<Option<SpectralPoint>> {
        let f = |x: f64| self.level_offset(x, kind);
        let (fa, fb) = (f(a)?, f(b)?);
        if fa * fb >= 0.0 {
            return Ok(None);
        }
        let xtol = 1e-15 * (1.0 + a.abs().max(b.abs()));
        let lambda = newton_bracketed(f, |x| self.discriminant_slope(x), a, b, xtol, 200)?;
        Ok(Some(self.classify_root(lambda, kind)?))
    }

    fn classify_root(&self, lambda: f64, kind: BoundaryKind) -> Result<SpectralPoint> {
        let slope = self.discriminant_slope(lambda)?;
        let classification = if slope.abs() > slope_threshold(lambda) {
            Classification::Simple
        } else {
            Classification::Ambiguous
        };
        Ok(SpectralPoint {
            lambda,
            kind,
            classification,
            disc_slope: slope,
            multiplicity: 1,
            index: 0,
        })
    }

    /// Follows a simple eigenvalue to a nearby potential: the root of the same
    /// level inside `[lambda - guard, lambda + guard]` with a slope of the same sign.
    pub fn track(&self, point: &SpectralPoint, guard: f64) -> Result<SpectralPoint> {
        let kind = point.kind;
        let f = |x: f64| self.level_offset(x, kind);
        let (a, b) = (point.lambda - guard, point.lambda + guard);
        let (fa, fb) = (f(a)?, f(b)?);
        if fa * fb >= 0.0 {
            return Err(Error::TrackingLost(point.lambda));
        }
        let xtol = 1e-15 * (1.0 + point.lambda.abs());
        let lambda = newton_bracketed(f, |x| self.discriminant_slope(x), a, b, xtol, 200)?;
        let mut next = self.classify_root(lambda, kind)?;
        if next.disc_slope.signum() != point.disc_slope.signum() {
            return Err(Error::TrackingLost(point.lambda));
        }
        next.index = point.index;
        Ok(next)
    }
}

fn assign_indices(points: &mut [SpectralPoint]) {
    if points.is_empty() {
        return;
    }
    let min_abs = points.iter().map(|p| p.lambda.abs()).fold(f64::INFINITY, f64::min);
    // ties (symmetric spectra) go to the nonnegative point
    let zero = points
        .iter()
        .rposition(|p| p.lambda.abs() <= min_abs + 1e-9)
        .unwrap_or(0);
    for (i, p) in points.iter_mut().enumerate() {
        p.index = i as i64 - zero as i64;
    }
}

pub fn locate_spectrum(u: &PeriodicField, window: (f64, f64)) -> Result<Spectrum> {
    ZsSolver::new(u).locate(window, LocateOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::potential::Potential;
    use std::f64::consts::PI;

    fn solver(p: Potential) -> ZsSolver {
        ZsSolver::new(&p.field(Grid::new(64).unwrap()).unwrap())
    }

    #[test]
    fn report_rows_follow_points() {
        let s = solver(Potential::Constant(1.0)).locate((-4.0, 4.0), LocateOptions::default()).unwrap();
        let rep = s.report();
        let labels: Vec<&str> = rep.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["double_-2", "simple_-1", "simple_0", "double_1"]);
        assert_eq!(rep.rows[2].values[1..4], [s.points[2].lambda, 1.0, 1.0]);
        assert!(rep.passed());
    }

    #[test]
    fn extremum_at_cell_midpoint() {
        // 1571 cells: lambda = 0 is the midpoint of the central cell
        let s = solver(Potential::Constant(1.0))
            .locate((-12.5 * PI, 12.5 * PI), LocateOptions::default())
            .unwrap();
        let simple: Vec<f64> = s.simple_points().map(|p| p.lambda).collect();
        assert_eq!(simple.len(), 2);
        assert!((simple[0] + 1.0).abs() < 1e-8 && (simple[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn free_spectrum_is_all_double() {
        let s = solver(Potential::Zero)
            .locate((-10.0, 10.0), LocateOptions::default())
            .unwrap();
        assert_eq!(s.points.len(), 7);
        for (p, n) in s.points.iter().zip(-3..=3) {
            assert!((p.lambda - n as f64 * PI).abs() < 1e-8, "{p:?}");
            assert_eq!(p.classification, Classification::Double);
            assert_eq!(p.index, n);
            let kind = if n % 2 == 0 {
                BoundaryKind::Periodic
            } else {
                BoundaryKind::Antiperiodic
            };
            assert_eq!(p.kind, kind);
        }
        assert_eq!(s.count_with_multiplicity(), 14);
    }

    #[test]
    fn constant_spectrum_pattern() {
        let s = solver(Potential::Constant(1.0))
            .locate((-10.0, 10.0), LocateOptions::default())
            .unwrap();
        let simple: Vec<f64> = s.simple_points().map(|p| p.lambda).collect();
        assert_eq!(simple.len(), 2);
        assert!((simple[0] + 1.0).abs() < 1e-10 && (simple[1] - 1.0).abs() < 1e-10);
        let doubles: Vec<f64> = s
            .points
            .iter()
            .filter(|p| p.classification == Classification::Double)
            .map(|p| p.lambda)
            .collect();
        let mut expect: Vec<f64> = (1..=3)
            .flat_map(|n| {
                let l = (1.0 + (n as f64 * PI).powi(2)).sqrt();
                [l, -l]
            })
            .collect();
        expect.sort_by(f64::total_cmp);
        assert_eq!(doubles.len(), expect.len());
        for (d, e) in doubles.iter().zip(&expect) {
            assert!((d - e).abs() < 1e-8);
        }
        assert_eq!(s.by_index(0).unwrap().lambda.signum(), 1.0);
    }

    #[test]
    fn endpoint_on_spectrum_is_rejected() {
        let err = solver(Potential::Zero)
            .locate((-PI, 5.0), LocateOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::EndpointOnSpectrum { .. }));
        assert!(solver(Potential::Zero)
            .locate((1.0, 1.0), LocateOptions::default())
            .is_err());
    }

    #[test]
    fn tracking_follows_a_perturbed_edge() {
        let g = Grid::new(64).unwrap();
        let base = Potential::Constant(1.0).field(g).unwrap();
        let s = ZsSolver::new(&base)
            .locate((-5.0, 5.0), LocateOptions::default())
            .unwrap();
        let i = s.position(0).unwrap();
        let moved = Potential::Constant(1.001).field(g).unwrap();
        let p = ZsSolver::new(&moved).track(&s.points[i], s.guard(i)).unwrap();
        assert!((p.lambda - 1.001).abs() < 1e-10);
    }
}
