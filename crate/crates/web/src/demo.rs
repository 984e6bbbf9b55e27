//! Plain-Rust core of the browser demo; the wasm exports wrap these.

use isolab_core::flows::{evolve_nls, FlowSpec, Sign};
use isolab_core::functionals::{invariant_eval, InvariantId};
use isolab_core::zs::{locate_spectrum, Classification, ZsSolver};
use isolab_core::{Grid, PeriodicField, Potential};

/// Grid sizes the page offers; larger grids make the spectrum scan sluggish.
pub const MAX_GRID: usize = 512;
pub const MAX_SAMPLES: usize = 4000;

pub fn field(potential: &str, n: usize) -> Result<PeriodicField, String> {
    if n > MAX_GRID {
        return Err(format!("grid of {n} points exceeds the demo limit {MAX_GRID}"));
    }
    let p: Potential = potential.parse().map_err(|e| format!("{e}"))?;
    let grid = Grid::new(n).map_err(|e| e.to_string())?;
    p.field(grid).map_err(|e| e.to_string())
}

fn check_window(lo: f64, hi: f64) -> Result<(), String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("bad window [{lo}, {hi}]"));
    }
    Ok(())
}

/// `[lambda_0, disc_0, lambda_1, disc_1, ...]` on `samples` equispaced points.
pub fn discriminant_curve(potential: &str, n: usize, lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>, String> {
    check_window(lo, hi)?;
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("sample count {samples} outside 2..={MAX_SAMPLES}"));
    }
    let solver = ZsSolver::new(&field(potential, n)?);
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let l = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        out.push(l);
        out.push(solver.discriminant(l).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

/// Stride-4 records `[lambda, multiplier, class, index]` with class 0 simple,
/// 1 double, 2 ambiguous.
pub fn spectrum(potential: &str, n: usize, lo: f64, hi: f64) -> Result<Vec<f64>, String> {
    check_window(lo, hi)?;
    let s = locate_spectrum(&field(potential, n)?, (lo, hi)).map_err(|e| e.to_string())?;
    Ok(s.points
        .iter()
        .flat_map(|p| {
            let class = match p.classification {
                Classification::Simple => 0.0,
                Classification::Double => 1.0,
                Classification::Ambiguous => 2.0,
            };
            [p.lambda, p.kind.multiplier(), class, p.index as f64]
        })
        .collect())
}

/// A defocusing NLS trajectory advanced in place.
pub struct Trajectory {
    u: PeriodicField,
    dt: f64,
    time: f64,
}

impl Trajectory {
    pub fn new(potential: &str, n: usize, dt: f64) -> Result<Self, String> {
        if !(dt > 0.0 && dt <= 1e-2) {
            return Err(format!("time step {dt} outside (0, 1e-2]"));
        }
        Ok(Self {
            u: field(potential, n)?,
            dt,
            time: 0.0,
        })
    }

    pub fn advance(&mut self, duration: f64) -> Result<(), String> {
        let spec = FlowSpec::nls(Sign::Defocusing, self.dt, duration);
        self.u = evolve_nls(&self.u, &spec).map_err(|e| e.to_string())?;
        self.time += duration;
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.u.samples().iter().map(|z| z.norm()).collect()
    }

    /// `[I1, I2, I3, I5]` at the current state.
    pub fn invariants(&self) -> Result<Vec<f64>, String> {
        InvariantId::ALL
            .iter()
            .map(|&id| invariant_eval(id, &self.u).map_err(|e| e.to_string()))
            .collect()
    }
}
