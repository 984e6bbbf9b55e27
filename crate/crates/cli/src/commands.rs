//! Experiment dispatch: one command produces one or more reports.

use std::fmt;
use std::str::FromStr;

use isolab_core::flows::{evolve_nls, FlowSpec, Sign};
use isolab_core::functionals::conservation_report;
use isolab_core::oracle::galerkin_agreement;
use isolab_core::potential::{random_band_limited, random_decaying};
use isolab_core::torus::{
    commutation_report, dg_bound_scan, drift_convergence, functional_involution, gradient_identity_report,
    gram_basis_analysis, involution_matrix, isospectral_drift, neighbor_level_set_scan, normal_tangent_residual,
    recurrence_scan, square_summability,
};
use isolab_core::zs::locate_spectrum;
use isolab_core::{Error, ExperimentReport, Grid, PeriodicField, Status};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Evolve,
    Conserve,
    Gradcheck,
    Involution,
    Commute,
    Basis,
    Neighbor,
    Dgscan,
    Recur,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Spectrum,
        Command::Evolve,
        Command::Conserve,
        Command::Gradcheck,
        Command::Involution,
        Command::Commute,
        Command::Basis,
        Command::Neighbor,
        Command::Dgscan,
        Command::Recur,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Conserve => "conserve",
            Command::Gradcheck => "gradcheck",
            Command::Involution => "involution",
            Command::Commute => "commute",
            Command::Basis => "basis",
            Command::Neighbor => "neighbor",
            Command::Dgscan => "dgscan",
            Command::Recur => "recur",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command '{s}'"))
    }
}

/// Random directions drawn for gradient checks and derivative scans.
pub const DIRECTIONS: u64 = 8;
const DIRECTION_BANDWIDTH: i64 = 4;
/// Smooth directions for the derivative scan: mode `k` scaled by `(1 + |k|)^-4`.
const SMOOTH_DECAY: f64 = 4.0;
const SMOOTH_BANDWIDTH: i64 = 24;
const DIFFERENCE_STEP: f64 = 1e-4;
const NEIGHBOR_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
const HIERARCHY_TIME: f64 = 0.3;

/// A run either produced reports or stopped early: `Usage` for inputs that
/// violate a precondition, `Numerical` for a computation that could not be
/// completed reliably.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Usage(String),
    Numerical(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Usage(m) => write!(f, "usage error: {m}"),
            RunError::Numerical(m) => write!(f, "inconclusive: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_)
            | Error::GridMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::ExponentOutOfRange(_)
            | Error::StepBudget { .. }
            | Error::EndpointOnSpectrum { .. }
            | Error::WindowMismatch
            | Error::TooLarge(_)
            | Error::UnknownInvariant(_) => RunError::Usage(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

fn indices(half_width: usize) -> Vec<i64> {
    let m = half_width as i64;
    (-m..=m).collect()
}

fn nls(cfg: &RunConfig) -> FlowSpec {
    FlowSpec::nls(Sign::Defocusing, cfg.dt, cfg.t_final)
}

fn band_limited(grid: Grid, seed: u64) -> Result<PeriodicField, Error> {
    random_band_limited(grid, DIRECTION_BANDWIDTH, seed)
}

fn evolve_report(u0: &PeriodicField, cfg: &RunConfig) -> Result<ExperimentReport, Error> {
    let u = evolve_nls(u0, &nls(cfg))?;
    let mut rep = ExperimentReport::new("evolve", &["x", "re", "im"]);
    rep.meta("t_final", cfg.t_final).meta("dt", cfg.dt);
    for (j, (x, z)) in u.grid().abscissae().zip(u.samples()).enumerate() {
        rep.info(format!("x{j}"), vec![x, z.re, z.im]);
    }
    let (a, b) = (u0.l2(), u.l2());
    let drift = (b - a).abs() / a.max(f64::MIN_POSITIVE);
    rep.check("l2_drift", vec![f64::NAN, b, drift], drift, 1e-12 * cfg.t_final.max(1.0));
    Ok(rep)
}

/// Runs one command. Reports come back in a fixed order.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<ExperimentReport>, RunError> {
    cfg.validate().map_err(RunError::Usage)?;
    let grid = Grid::new(cfg.grid_n)?;
    let u = cfg.potential.field(grid)?;
    let m = cfg.truncation_m;
    let reports = match command {
        Command::Spectrum => {
            let spectrum = locate_spectrum(&u, cfg.window)?;
            let agreement = galerkin_agreement(&u, &spectrum, 1e-6)?;
            vec![spectrum.report(), agreement]
        }
        Command::Evolve => {
            let spec = nls(cfg);
            let t = cfg.t_final;
            vec![
                evolve_report(&u, cfg)?,
                isospectral_drift(&u, &spec, &[0.25 * t, 0.5 * t, t], cfg.window, m as i64, 1e-5)?,
                drift_convergence(&u, &spec, cfg.window, m as i64, 1e-5)?,
            ]
        }
        Command::Conserve => vec![conservation_report(&u, &nls(cfg))?],
        Command::Gradcheck => {
            let dirs = (0..DIRECTIONS)
                .map(|k| band_limited(grid, cfg.seed + k))
                .collect::<Result<Vec<_>, _>>()?;
            vec![gradient_identity_report(&u, &dirs, &indices(m / 2), cfg.window, DIFFERENCE_STEP, 1e-4)?]
        }
        Command::Involution => vec![involution_matrix(&u, &indices(m / 2), cfg.window)?, functional_involution(&u)?],
        Command::Commute => {
            let flows = [
                ("m1", FlowSpec::hierarchy(1, HIERARCHY_TIME)),
                ("m2", FlowSpec::hierarchy(2, HIERARCHY_TIME)),
                ("nls", nls(cfg)),
            ];
            vec![commutation_report(&u, &flows, &[cfg.dt, 0.5 * cfg.dt], 1e-6)?]
        }
        Command::Basis => {
            let v = band_limited(grid, cfg.seed)?;
            vec![
                gram_basis_analysis(&u, &[m / 2, m, 3 * m / 2])?,
                normal_tangent_residual(&u, &v, &[m / 2, m, 3 * m / 2, 2 * m])?,
                square_summability(&u, 21, 20)?,
            ]
        }
        Command::Neighbor => vec![neighbor_level_set_scan(&u, 0, &NEIGHBOR_STEPS, cfg.window)?],
        Command::Dgscan => {
            let bandwidth = SMOOTH_BANDWIDTH.min(cfg.grid_n as i64 / 2 - 1);
            let dirs = (0..DIRECTIONS)
                .map(|k| random_decaying(grid, bandwidth, SMOOTH_DECAY, cfg.seed + k))
                .collect::<Result<Vec<_>, _>>()?;
            vec![dg_bound_scan(&u, &dirs, &indices(m), cfg.window, DIFFERENCE_STEP)?]
        }
        Command::Recur => {
            let samples = ((cfg.t_final / (10.0 * cfg.dt)).ceil() as usize).max(2);
            vec![recurrence_scan(&u, &nls(cfg), cfg.t_final, samples, 0.1 * u.l2())?]
        }
    };
    Ok(reports
        .into_iter()
        .map(|mut r| {
            let run = [
                ("command", command.to_string()),
                ("potential", cfg.potential.to_string()),
                ("grid_n", cfg.grid_n.to_string()),
                ("seed", cfg.seed.to_string()),
                ("truncation_m", cfg.truncation_m.to_string()),
            ];
            for (key, value) in run {
                if !r.metadata.iter().any(|(k, _)| k == key) {
                    r.meta(key, value);
                }
            }
            r
        })
        .collect())
}

/// `2` if any row is inconclusive, else `1` if any row fails, else `0`.
pub fn exit_code(reports: &[ExperimentReport]) -> i32 {
    let any = |s: Status| reports.iter().any(|r| r.rows.iter().any(|row| row.status == s));
    if any(Status::Inconclusive) {
        2
    } else if any(Status::Fail) {
        1
    } else {
        0
    }
}

/// First fail or inconclusive row across the reports, formatted for stderr.
pub fn first_problem(reports: &[ExperimentReport]) -> Option<String> {
    reports.iter().find_map(|r| {
        r.first_failure().map(|row| {
            let values: Vec<String> = row.values.iter().map(|v| format!("{v:e}")).collect();
            format!(
                "{}: {} {} [{}] tolerance {:e}",
                r.name,
                row.label,
                row.status.as_str(),
                values.join(", "),
                row.tolerance
            )
        })
    })
}
