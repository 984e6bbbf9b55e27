//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use isolab_core::flows::{FlowSpec, Sign};
use isolab_core::functionals::conservation_report;
use isolab_core::oracle::{const_potential_discriminant, galerkin_agreement};
use isolab_core::potential::{random_band_limited, random_decaying};
use isolab_core::torus::{
    commutation_report, dg_bound_scan, drift_convergence, functional_involution, gradient_identity_report,
    gram_basis_analysis, involution_matrix, isospectral_drift, neighbor_level_set_scan, square_summability,
};
use isolab_core::zs::{discriminant, locate_spectrum, Classification};
use isolab_core::{ExperimentReport, Grid, PeriodicField, Potential, Status};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn grid() -> Grid {
    Grid::new(128).unwrap()
}

fn field(p: Potential) -> PeriodicField {
    p.field(grid()).unwrap()
}

fn nls() -> FlowSpec {
    FlowSpec::nls(Sign::Defocusing, 1e-3, 1.0)
}

fn summary(rep: &ExperimentReport) -> String {
    match rep.first_failure() {
        Some(row) => format!("{} {}: {} {:?}", rep.name, row.status.as_str(), row.label, row.values),
        None => format!("{} pass", rep.name),
    }
}

fn value(rep: &ExperimentReport, label: &str, column: usize) -> f64 {
    rep.row(label).map_or(f64::NAN, |r| r.values[column])
}

fn timed(limit: Option<Duration>, run: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let v = run();
    let took = start.elapsed();
    match limit {
        Some(l) if took > l => verdict(false, format!("{} | {:.2?} over the {:?} budget", v.detail, took, l)),
        _ => verdict(v.pass, format!("{} | {:.2?}", v.detail, took)),
    }
}

fn free_spectrum() -> Verdict {
    let s = locate_spectrum(&field(Potential::Zero), (-10.0, 10.0)).unwrap();
    let lambdas: Vec<f64> = s.points.iter().map(|p| p.lambda).collect();
    let expect: Vec<f64> = (-3..=3).map(|n| n as f64 * PI).collect();
    let err = if lambdas.len() == expect.len() {
        lambdas.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let doubles = s.points.iter().all(|p| p.classification == Classification::Double);
    verdict(
        err < 1e-8 && doubles,
        format!("{} points, all double: {doubles}, max |lambda - n pi| = {err:.2e}", lambdas.len()),
    )
}

fn constant_spectrum() -> Verdict {
    let u = field(Potential::Constant(1.0));
    let window = (-10.0, 10.0);
    let disc_err = (0..200)
        .map(|i| -10.0 + 20.0 * (i as f64 + 0.5) / 200.0)
        .map(|l| (discriminant(&u, l).unwrap() - const_potential_discriminant(1.0, l)).abs())
        .fold(0.0, f64::max);
    let s = locate_spectrum(&u, window).unwrap();
    let mut expect: Vec<(f64, Classification)> = vec![(-1.0, Classification::Simple), (1.0, Classification::Simple)];
    for n in 1..=3 {
        let l = (1.0 + (n as f64 * PI).powi(2)).sqrt();
        expect.push((l, Classification::Double));
        expect.push((-l, Classification::Double));
    }
    expect.sort_by(|a, b| a.0.total_cmp(&b.0));
    let points_ok = s.points.len() == expect.len()
        && s.points.iter().zip(&expect).all(|(p, (l, c))| (p.lambda - l).abs() < 1e-7 && p.classification == *c);
    let oracle = galerkin_agreement(&u, &s, 1e-6).unwrap();
    verdict(
        disc_err < 1e-8 && points_ok && oracle.passed(),
        format!("disc error {disc_err:.2e} at 200 points, pattern matched: {points_ok}, {}", summary(&oracle)),
    )
}

fn isospectrality() -> Verdict {
    let u = field(Potential::Wave);
    let window = (-6.0, 6.0);
    let drift = isospectral_drift(&u, &nls(), &[0.25, 0.5, 1.0], window, 6, 1e-5).unwrap();
    let conv = drift_convergence(&u, &nls(), window, 6, 1e-5).unwrap();
    let ratio = value(&conv, "ratio", 2);
    verdict(
        drift.passed() && conv.passed() && (3.0..=5.0).contains(&ratio),
        format!(
            "max drift {:.2e}, halving ratio {ratio:.3}",
            value(&drift, "max_drift", 3)
        ),
    )
}

fn conservation() -> Verdict {
    let rep = conservation_report(&field(Potential::Wave), &nls()).unwrap();
    let drifts: Vec<String> = ["I1", "I2", "I3", "I5"]
        .iter()
        .map(|l| format!("{l} {:.1e}", value(&rep, l, 2)))
        .collect();
    verdict(rep.passed(), format!("{} ({})", drifts.join(", "), summary(&rep)))
}

fn gradient_identity() -> Verdict {
    let u = field(Potential::Wave);
    let window = (-10.0, 10.0);
    let dirs: Vec<PeriodicField> = (0..8).map(|s| random_band_limited(grid(), 4, s).unwrap()).collect();
    let rep = gradient_identity_report(&u, &dirs, &[-4, -3, -2, -1, 0, 1, 2, 3], window, 1e-4, 1e-4).unwrap();
    let worst = rep
        .rows
        .iter()
        .filter(|r| r.status != Status::Info)
        .map(|r| r.values[5])
        .fold(0.0, f64::max);
    let order = value(&rep, "observed_order", 5);
    let skipped = locate_spectrum(&u, window)
        .unwrap()
        .by_index(4)
        .map_or("absent".to_string(), |p| p.classification.as_str().to_string());
    verdict(
        rep.passed() && (order - 2.0).abs() <= 0.5,
        format!("worst relative error {worst:.2e}, observed order {order:.3}; index 4 is {skipped}, not scanned"),
    )
}

fn involution() -> Verdict {
    let window = (-10.0, 10.0);
    let wave = involution_matrix(&field(Potential::Wave), &[-4, -3, -2, -1, 0, 1, 2, 3], window).unwrap();
    let rich = involution_matrix(&field(Potential::Rich), &[-4, -3, -2, -1, 0, 1, 2, 3, 4], window).unwrap();
    let fw = functional_involution(&field(Potential::Wave)).unwrap();
    let fr = functional_involution(&field(Potential::Rich)).unwrap();
    let all = [&wave, &rich, &fw, &fr];
    let worst = all
        .iter()
        .map(|r| value(r, "max_relative_entry", 0))
        .fold(0.0, f64::max);
    verdict(
        all.iter().all(|r| r.passed()),
        format!("largest scaled bracket {worst:.2e} over wave and rich, eigenvalues and I1..I5"),
    )
}

fn commutation() -> Verdict {
    let flows = [
        ("m1", FlowSpec::hierarchy(1, 0.3)),
        ("m2", FlowSpec::hierarchy(2, 0.3)),
        ("nls", FlowSpec::nls(Sign::Defocusing, 1e-3, 0.2)),
    ];
    let rep = commutation_report(&field(Potential::Wave), &flows, &[1e-3, 5e-4, 2.5e-4], 1e-6).unwrap();
    let worst = rep
        .rows
        .iter()
        .filter(|r| r.label.contains('@'))
        .map(|r| r.values[1])
        .fold(0.0, f64::max);
    verdict(rep.passed(), format!("largest defect {worst:.2e} at dt in {{1e-3, 5e-4, 2.5e-4}}"))
}

fn basis() -> Verdict {
    let free = gram_basis_analysis(&field(Potential::Zero), &[4, 8, 12]).unwrap();
    let identity = ["gram_4", "gram_8", "gram_12"]
        .iter()
        .map(|l| value(&free, l, 4))
        .fold(0.0, f64::max);
    let one = gram_basis_analysis(&field(Potential::Constant(1.0)), &[4, 8, 12]).unwrap();
    let growth = value(&one, "condition_growth", 3);
    let slope = value(&one, "hs_decay_slope", 3);
    verdict(
        identity <= 1e-10 && one.passed(),
        format!("u = 0 |Gram - 2I| {identity:.2e}; u = 1 condition growth {growth:.3}, HS slope {slope:.3}"),
    )
}

fn summability() -> Verdict {
    let reps: Vec<ExperimentReport> = [Potential::Constant(1.0), Potential::Wave]
        .into_iter()
        .map(|p| square_summability(&field(p), 21, 20).unwrap())
        .collect();
    let incs: Vec<String> = reps
        .iter()
        .map(|r| format!("{:.2e}", value(r, "final_increment", 2)))
        .collect();
    verdict(
        reps.iter().all(|r| r.passed()),
        format!("relative final increment at |n| = 21: u = 1 {}, wave {}", incs[0], incs[1]),
    )
}

fn neighbors() -> Verdict {
    let rep = neighbor_level_set_scan(
        &field(Potential::Constant(1.0)),
        0,
        &[1e-3, 5e-4, 2.5e-4],
        (-10.0, 10.0),
    )
    .unwrap();
    verdict(
        rep.passed(),
        format!(
            "transverse spread {:.2e}, floor c = {:.4}, tangent order {:.3}",
            value(&rep, "transverse_spread", 3),
            value(&rep, "transverse_floor", 3),
            value(&rep, "tangent_order", 3)
        ),
    )
}

fn derivative_bounds() -> Verdict {
    let idx: Vec<i64> = (-8..=8).collect();
    let smooth: Vec<PeriodicField> = (0..8).map(|s| random_decaying(grid(), 24, 4.0, s).unwrap()).collect();
    let rep = dg_bound_scan(&field(Potential::Rough), &smooth, &idx, (-14.0, 14.0), 1e-4).unwrap();
    let flat: Vec<PeriodicField> = (0..8).map(|s| random_band_limited(grid(), 4, s).unwrap()).collect();
    let contrast = dg_bound_scan(&field(Potential::Rich), &flat, &idx, (-16.0, 16.0), 1e-4).unwrap();
    verdict(
        rep.passed(),
        format!(
            "rough u, smooth directions: slope {:.3}, final increment {:.2e} (rich u, band-limited directions: slope {:.3}, info)",
            value(&rep, "decay_slope", 2),
            value(&rep, "final_increment", 2),
            value(&contrast, "decay_slope", 2)
        ),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str]) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_isolab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("ISOLAB_THREADS", threads)
        .output()
        .expect("isolab runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Verdict {
    let runs: [&[&str]; 2] = [
        &["spectrum", "--set", "potential=const:1.0"],
        &["gradcheck", "--set", "truncation_m=6", "--set", "seed=3"],
    ];
    let mut compared = 0;
    for args in runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let codes = (run_cli(a.path(), "1", args), run_cli(b.path(), "4", args));
        let (la, lb) = (listing(a.path()), listing(b.path()));
        if codes.0 != 0 || codes.1 != 0 || la.is_empty() || la != lb {
            return verdict(false, format!("{} differs between runs (exit codes {codes:?})", args[0]));
        }
        compared += la.len();
    }
    verdict(true, format!("{compared} CSV files byte-identical across 1 and 4 threads"))
}

type Criterion = (&'static str, Option<Duration>, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 12] = [
        ("free spectrum", Some(Duration::from_secs(5)), free_spectrum),
        ("constant potential", Some(Duration::from_secs(30)), constant_spectrum),
        ("isospectrality", Some(Duration::from_secs(120)), isospectrality),
        ("conservation", None, conservation),
        ("gradient identity", None, gradient_identity),
        ("involution", None, involution),
        ("flow commutation", None, commutation),
        ("basis structure", None, basis),
        ("square summability", None, summability),
        ("neighbouring level sets", None, neighbors),
        ("derivative bounds", None, derivative_bounds),
        ("reproducibility", None, reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let v = timed(limit, run);
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if failed > 0 {
        println!("{failed} of 12 criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
