//! Experiments on the isospectral level sets: drift of the spectrum under the
//! flows, involution of the eigenvalues, the normal and tangent families
//! `G = i f1^2`, `K = -f2^2`, derivative bounds for `G`, spectral separation of
//! neighbouring level sets and near-returns of trajectories.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{real_pairing, PeriodicField, C64};
use crate::flows::{commutation_defect, evolve, FlowSpec};
use crate::functionals::{invariant_gradient, poisson_bracket, InvariantId};
use crate::report::{ExperimentReport, Status};
use crate::roots::golden_max;
use crate::zs::{
    gaps, gradient_pairing, lambda_gradient, locate_spectrum, partial_sums, spectral_deviation, EigenPair, Spectrum, ZsSolver,
};
use crate::zs::gaps::free_square;

fn window_meta(rep: &mut ExperimentReport, window: (f64, f64)) {
    rep.meta("window", format!("[{}; {}]", window.0, window.1));
}

/// Window `[-(m + 1/2) pi, (m + 1/2) pi]` holding the gaps `|n| <= m`.
pub fn gap_window(m: usize) -> (f64, f64) {
    let edge = (m as f64 + 0.5) * PI;
    (-edge, edge)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn same_structure(a: &Spectrum, b: &Spectrum) -> bool {
    a.points.len() == b.points.len()
        && a
            .points
            .iter()
            .zip(&b.points)
            .all(|(p, q)| p.kind == q.kind && p.classification == q.classification && p.index == q.index)
}

/// Relocates the spectrum at each sample time and reports, per index with
/// `|index| <= max_index`, the largest distance from its initial position.
pub fn isospectral_drift(
    u0: &PeriodicField,
    spec: &FlowSpec,
    sample_times: &[f64],
    window: (f64, f64),
    max_index: i64,
    tol: f64,
) -> Result<ExperimentReport> {
    let s0 = locate_spectrum(u0, window)?;
    let mut times: Vec<f64> = sample_times.to_vec();
    times.sort_by(f64::total_cmp);
    let mut rep = ExperimentReport::new("isospectral_drift", &["t", "index", "lambda0", "drift"]);
    rep.meta("grid_n", u0.len())
        .meta("dt", spec.dt)
        .meta("flow", format!("{:?}", spec.kind))
        .meta("max_index", max_index);
    window_meta(&mut rep, window);

    let tracked: Vec<usize> = (0..s0.points.len())
        .filter(|&i| s0.points[i].index.abs() <= max_index)
        .collect();
    let mut worst = vec![0.0f64; tracked.len()];
    let mut u = u0.clone();
    let mut t_prev = 0.0;
    let mut consistent = true;
    for &t in &times {
        if t != t_prev {
            u = evolve(&u, &spec.with_time(t - t_prev))?;
            t_prev = t;
        }
        let st = locate_spectrum(&u, window)?;
        if !same_structure(&s0, &st) {
            rep.push("structure_change", vec![t, f64::NAN, f64::NAN, f64::NAN], 0.0, Status::Inconclusive);
            consistent = false;
            break;
        }
        let mut at_t = 0.0f64;
        for (w, &i) in worst.iter_mut().zip(&tracked) {
            let d = (st.points[i].lambda - s0.points[i].lambda).abs();
            *w = w.max(d);
            at_t = at_t.max(d);
        }
        rep.info(format!("time_{t}"), vec![t, f64::NAN, f64::NAN, at_t]);
    }
    if consistent {
        let t_end = times.last().copied().unwrap_or(0.0);
        for (w, &i) in worst.iter().zip(&tracked) {
            let p = &s0.points[i];
            rep.check(format!("index_{}", p.index), vec![t_end, p.index as f64, p.lambda, *w], *w, tol);
        }
        let max = worst.iter().copied().fold(0.0, f64::max);
        rep.check("max_drift", vec![t_end, f64::NAN, f64::NAN, max], max, tol);
    }
    if s0.has_ambiguous() {
        rep.meta("ambiguous", "true");
        rep.mark_inconclusive();
    }
    Ok(rep)
}

pub fn max_drift(rep: &ExperimentReport) -> Option<f64> {
    rep.row("max_drift").map(|r| r.values[3])
}

/// Drift at `t_final` for `dt` and `dt / 2`; the ratio should be near 4 for a
/// second-order integrator.
pub fn drift_convergence(
    u0: &PeriodicField,
    spec: &FlowSpec,
    window: (f64, f64),
    max_index: i64,
    tol: f64,
) -> Result<ExperimentReport> {
    let coarse = isospectral_drift(u0, spec, &[spec.t_final], window, max_index, tol)?;
    let fine_spec = spec.with_dt(0.5 * spec.dt);
    let fine = isospectral_drift(u0, &fine_spec, &[spec.t_final], window, max_index, tol)?;
    let mut rep = ExperimentReport::new("drift_convergence", &["dt", "drift", "ratio"]);
    rep.meta("grid_n", u0.len()).meta("t_final", spec.t_final).meta("max_index", max_index);
    window_meta(&mut rep, window);
    let (a, b) = match (max_drift(&coarse), max_drift(&fine)) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            rep.push("drift_dt", vec![spec.dt, f64::NAN, f64::NAN], tol, Status::Inconclusive);
            return Ok(rep);
        }
    };
    rep.check("drift_dt", vec![spec.dt, a, f64::NAN], a, tol);
    rep.check("drift_half_dt", vec![fine_spec.dt, b, f64::NAN], b, tol);
    let ratio = a / b;
    // ratio within [3, 5]
    rep.check("ratio", vec![f64::NAN, f64::NAN, ratio], (ratio - 4.0).abs(), 1.0);
    if coarse.outcome() == crate::report::Outcome::Inconclusive || fine.outcome() == crate::report::Outcome::Inconclusive {
        rep.mark_inconclusive();
    }
    Ok(rep)
}

/// Antisymmetric table `{a, b} = <G_a, i G_b>`, judged against
/// `rel_tol (1 + |G_a| |G_b|)`.
pub fn bracket_table(name: &str, gradients: &[(String, PeriodicField)], rel_tol: f64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new(name, &["bracket", "scale"]);
    let n = gradients.len();
    let mut table = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            table[a][b] = poisson_bracket(&gradients[a].1, &gradients[b].1)?;
        }
    }
    let (mut worst, mut asym) = (0.0f64, 0.0f64);
    for a in 0..n {
        for b in 0..n {
            let scale = 1.0 + gradients[a].1.l2() * gradients[b].1.l2();
            let rel = table[a][b].abs() / scale;
            worst = worst.max(rel);
            asym = asym.max((table[a][b] + table[b][a]).abs() / scale);
            rep.check(
                format!("{}|{}", gradients[a].0, gradients[b].0),
                vec![table[a][b], scale],
                rel,
                rel_tol,
            );
        }
    }
    rep.check("max_relative_entry", vec![worst, f64::NAN], worst, rel_tol);
    rep.check("antisymmetry", vec![asym, f64::NAN], asym, 1e-12);
    Ok(rep)
}

/// Eigenpairs for the given indices; every indexed point must be simple.
fn indexed_pairs(solver: &ZsSolver, spectrum: &Spectrum, indices: &[i64]) -> Result<Vec<EigenPair>> {
    indices
        .par_iter()
        .map(|&m| {
            let p = spectrum
                .by_index(m)
                .ok_or_else(|| Error::InvalidArgument(format!("no eigenvalue with index {m} in the window")))?;
            solver.eigenpair(p)
        })
        .collect()
}

/// Central differences of tracked eigenvalues, `(lambda(u + eps v) - lambda(u - eps v)) / 2 eps`,
/// against the predicted `<G, v> / (|f1|^2 + |f2|^2)`. The observed order comes
/// from repeating the differences with step `2 eps`.
pub fn gradient_identity_report(
    u: &PeriodicField,
    directions: &[PeriodicField],
    indices: &[i64],
    window: (f64, f64),
    eps: f64,
    rel_tol: f64,
) -> Result<ExperimentReport> {
    if !(1e-8..=1e-2).contains(&eps) {
        return Err(Error::InvalidArgument(format!("difference step {eps} outside [1e-8, 1e-2]")));
    }
    let spectrum = locate_spectrum(u, window)?;
    let solver = ZsSolver::new(u);
    let mut rep = ExperimentReport::new(
        "gradient_identity",
        &["index", "lambda", "direction", "difference", "predicted", "relative_error"],
    );
    rep.meta("grid_n", u.len()).meta("eps", eps).meta("directions", directions.len());
    window_meta(&mut rep, window);

    let shifted = |v: &PeriodicField, h: f64, pos: usize| -> Result<f64> {
        let plus = ZsSolver::new(&u.axpy(C64::new(h, 0.0), v)).track(&spectrum.points[pos], spectrum.guard(pos))?;
        let minus = ZsSolver::new(&u.axpy(C64::new(-h, 0.0), v)).track(&spectrum.points[pos], spectrum.guard(pos))?;
        Ok((plus.lambda - minus.lambda) / (2.0 * h))
    };
    let (mut err_h, mut err_2h) = (0.0, 0.0);
    for &m in indices {
        let Some(pos) = spectrum.position(m) else {
            return Err(Error::InvalidArgument(format!("no eigenvalue with index {m} in the window")));
        };
        let point = spectrum.points[pos];
        if !point.is_simple() {
            rep.push(
                format!("m{m}"),
                vec![m as f64, point.lambda, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
                rel_tol,
                Status::Inconclusive,
            );
            continue;
        }
        let pair = solver.eigenpair(&point)?;
        let results: Vec<Result<(f64, f64, f64)>> = directions
            .par_iter()
            .map(|v| {
                let predicted = gradient_pairing(&pair, v)?;
                Ok((predicted, shifted(v, eps, pos)?, shifted(v, 2.0 * eps, pos)?))
            })
            .collect();
        for (k, r) in results.into_iter().enumerate() {
            let values = |d: f64, p: f64, e: f64| vec![m as f64, point.lambda, k as f64, d, p, e];
            match r {
                Ok((predicted, d1, d2)) => {
                    let scale = predicted.abs().max(f64::MIN_POSITIVE);
                    let rel = (d1 - predicted).abs() / scale;
                    err_h += (d1 - predicted).abs();
                    err_2h += (d2 - predicted).abs();
                    rep.check(format!("m{m}_v{k}"), values(d1, predicted, rel), rel, rel_tol);
                }
                Err(Error::TrackingLost(_)) => {
                    rep.push(format!("m{m}_v{k}"), values(f64::NAN, f64::NAN, f64::NAN), rel_tol, Status::Inconclusive);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let order = (err_2h / err_h).log2();
    rep.info("observed_order", vec![f64::NAN, f64::NAN, f64::NAN, err_h, err_2h, order]);
    Ok(rep)
}

/// Pairwise commutation defects `|A(B(u0)) - B(A(u0))|` of the named flows at
/// each time step in `dts`. A pair converges when its defect at the last step
/// is no larger than at the first, or both sit at rounding level.
pub fn commutation_report(
    u0: &PeriodicField,
    flows: &[(&str, FlowSpec)],
    dts: &[f64],
    tol: f64,
) -> Result<ExperimentReport> {
    const ROUNDING: f64 = 1e-12;
    let mut rep = ExperimentReport::new("commutation", &["dt", "defect", "ratio"]);
    rep.meta("grid_n", u0.len());
    for (i, (na, a)) in flows.iter().enumerate() {
        for (nb, b) in &flows[i + 1..] {
            let defects: Vec<f64> = dts
                .iter()
                .map(|&dt| commutation_defect(u0, &a.with_dt(dt), &b.with_dt(dt)))
                .collect::<Result<_>>()?;
            for (&dt, &d) in dts.iter().zip(&defects) {
                rep.check(format!("{na}|{nb}@{dt}"), vec![dt, d, f64::NAN], d, tol);
            }
            if let (Some(&first), Some(&last)) = (defects.first(), defects.last()) {
                let ratio = last / first.max(ROUNDING);
                rep.check(format!("{na}|{nb}_converging"), vec![f64::NAN, last, ratio], ratio, 1.0);
            }
        }
    }
    Ok(rep)
}

/// `{lambda_m, lambda_n}` over the index set, with `G = i f1^2`.
pub fn involution_matrix(u: &PeriodicField, indices: &[i64], window: (f64, f64)) -> Result<ExperimentReport> {
    let spectrum = locate_spectrum(u, window)?;
    let solver = ZsSolver::new(u);
    let pairs = indexed_pairs(&solver, &spectrum, indices)?;
    let grads: Vec<(String, PeriodicField)> = pairs
        .iter()
        .map(|p| (format!("lambda_{}", p.point.index), lambda_gradient(p).0))
        .collect();
    let mut rep = bracket_table("involution", &grads, 1e-7)?;
    rep.meta("grid_n", u.len());
    window_meta(&mut rep, window);
    Ok(rep)
}

/// Brackets of the conserved functionals.
pub fn functional_involution(u: &PeriodicField) -> Result<ExperimentReport> {
    let grads: Vec<(String, PeriodicField)> = InvariantId::ALL
        .iter()
        .map(|&id| (id.to_string(), invariant_gradient(id, u)))
        .collect();
    let mut rep = bracket_table("functional_involution", &grads, 1e-7)?;
    rep.meta("grid_n", u.len());
    Ok(rep)
}

/// Gap representatives for every `|n| <= m`, keyed by `n`.
fn representatives(u: &PeriodicField, m: usize) -> Result<(Spectrum, Vec<(i64, EigenPair)>)> {
    let window = gap_window(m);
    let spectrum = locate_spectrum(u, window)?;
    let solver = ZsSolver::new(u);
    let all = gaps(&spectrum)?;
    let m = m as i64;
    let wanted: Vec<_> = (-m..=m)
        .map(|n| {
            all.iter()
                .find(|g| g.n == n)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("gap {n} not found in {window:?}")))
        })
        .collect::<Result<_>>()?;
    let pairs = wanted
        .par_iter()
        .map(|g| solver.gap_representative(g).map(|p| (g.n, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok((spectrum, pairs))
}

fn real_gram(fields: &[&PeriodicField]) -> Result<DMatrix<f64>> {
    let n = fields.len();
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = real_pairing(fields[a], fields[b])?;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

/// `min_phase |f - e^{i phase} g|^2` in L2.
fn aligned_distance_sq(f: &PeriodicField, g: &PeriodicField) -> f64 {
    let n = f.len() as f64;
    let cross: C64 = f.samples().iter().zip(g.samples()).map(|(a, b)| a * b.conj()).sum::<C64>() / n;
    (f.l2().powi(2) + g.l2().powi(2) - 2.0 * cross.norm()).max(0.0)
}

/// Gram matrices of `{f1_n^2}` over `|n| <= M` for each truncation, and the
/// Hilbert-Schmidt sums `sum |f1_n^2 - g_n|^2` against `g_n = e^{-2 i n pi x}`.
pub fn gram_basis_analysis(u: &PeriodicField, truncations: &[usize]) -> Result<ExperimentReport> {
    let m_max = *truncations
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no truncation given".into()))?;
    let (spectrum, pairs) = representatives(u, m_max)?;
    let squares: Vec<(i64, PeriodicField)> = pairs.iter().map(|(n, p)| (*n, p.f1_squared())).collect();
    let mut rep = ExperimentReport::new("gram_basis", &["m", "min_eig", "max_eig", "condition", "identity_defect"]);
    rep.meta("grid_n", u.len()).meta("truncations", format!("{truncations:?}"));
    window_meta(&mut rep, spectrum.window);

    let mut conds = Vec::new();
    for &m in truncations {
        let family: Vec<&PeriodicField> = squares.iter().filter(|(n, _)| n.unsigned_abs() as usize <= m).map(|(_, f)| f).collect();
        let gram = real_gram(&family)?;
        let defect = (&gram - DMatrix::identity(gram.nrows(), gram.ncols()) * 2.0).amax();
        let eig = gram.symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        let cond = hi / lo;
        conds.push(cond);
        rep.info(format!("gram_{m}"), vec![m as f64, lo, hi, cond, defect]);
    }
    if conds.len() > 1 {
        let growth = conds[conds.len() - 1] / conds[0];
        rep.check("condition_growth", vec![f64::NAN, f64::NAN, f64::NAN, growth, f64::NAN], growth, 10.0);
    }

    let mut terms: Vec<(i64, f64)> = squares
        .iter()
        .map(|(n, f)| (*n, aligned_distance_sq(f, &free_square(u, *n))))
        .collect();
    terms.sort_by_key(|(n, _)| (n.abs(), *n));
    let mut total = 0.0;
    let mut grouped: Vec<(f64, f64)> = Vec::new();
    for &(n, t) in &terms {
        total += t;
        rep.info(format!("hs_{n}"), vec![n as f64, n as f64 * PI, t, total, f64::NAN]);
        if n != 0 {
            match grouped.last_mut() {
                Some(last) if last.0 == n.abs() as f64 * PI => last.1 += t,
                _ => grouped.push((n.abs() as f64 * PI, t)),
            }
        }
    }
    // at a free potential every deviation is rounding noise and has no slope
    if total > 1e-12 {
        let slope = loglog_slope(&grouped);
        rep.check("hs_decay_slope", vec![f64::NAN, f64::NAN, f64::NAN, slope, f64::NAN], slope, -1.5);
    } else {
        rep.info("hs_decay_slope", vec![f64::NAN; 5]);
    }
    rep.info("hs_total", vec![f64::NAN, f64::NAN, f64::NAN, total, f64::NAN]);
    if spectrum.has_ambiguous() {
        rep.meta("ambiguous", "true");
        rep.mark_inconclusive();
    }
    Ok(rep)
}

fn realify(f: &PeriodicField) -> DVector<f64> {
    DVector::from_iterator(2 * f.len(), f.samples().iter().flat_map(|z| [z.re, z.im]))
}

/// Least-squares residual of `v` against `span{G_n, K_n : |n| <= M}` for each truncation.
pub fn normal_tangent_residual(u: &PeriodicField, v: &PeriodicField, truncations: &[usize]) -> Result<ExperimentReport> {
    u.check_same_grid(v)?;
    let m_max = *truncations
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no truncation given".into()))?;
    let (spectrum, pairs) = representatives(u, m_max)?;
    let mut rep = ExperimentReport::new("normal_tangent", &["m", "residual", "relative", "inverse_condition"]);
    rep.meta("grid_n", u.len()).meta("truncations", format!("{truncations:?}"));
    window_meta(&mut rep, spectrum.window);
    let target = realify(v);
    let v_norm = v.l2();
    let mut ms: Vec<usize> = truncations.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let mut residuals = Vec::new();
    let mut deficient = false;
    for &m in &ms {
        let family: Vec<PeriodicField> = pairs
            .iter()
            .filter(|(n, _)| n.unsigned_abs() as usize <= m)
            .flat_map(|(_, p)| {
                let (g, k) = lambda_gradient(p);
                [g, k]
            })
            .collect();
        let cols: Vec<DVector<f64>> = family.iter().map(realify).collect();
        let a = DMatrix::from_columns(&cols);
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let inv_cond = if smax > 0.0 { smin / smax } else { 0.0 };
        if inv_cond < 1e-12 {
            deficient = true;
        }
        let coef = svd
            .solve(&target, 1e-14 * smax)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let fit = &a * coef;
        let diff = &target - fit;
        // realified vectors carry the 1/N quadrature weight implicitly
        let residual = (diff.norm_squared() / u.len() as f64).sqrt();
        let relative = if v_norm > 0.0 { residual / v_norm } else { 0.0 };
        residuals.push(residual);
        rep.info(format!("residual_{m}"), vec![m as f64, residual, relative, inv_cond]);
    }
    let rise = residuals.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let slack = 1e-10 * (1.0 + v_norm);
    rep.check("monotone", vec![f64::NAN, rise, f64::NAN, f64::NAN], rise, slack);
    let (first, last) = (residuals[0], residuals[residuals.len() - 1]);
    let reduction = if first > 0.0 { last / first } else { 0.0 };
    rep.info("reduction", vec![f64::NAN, reduction, f64::NAN, f64::NAN]);
    if deficient {
        rep.meta("rank_deficient", "true");
        rep.mark_inconclusive();
    }
    if spectrum.has_ambiguous() {
        rep.meta("ambiguous", "true");
    }
    Ok(rep)
}

/// `G` of the eigenvalue followed from `point` to the potential `w`.
fn tracked_gradient(w: &PeriodicField, spectrum: &Spectrum, pos: usize) -> Result<PeriodicField> {
    let solver = ZsSolver::new(w);
    let point = solver.track(&spectrum.points[pos], spectrum.guard(pos))?;
    Ok(lambda_gradient(&solver.eigenpair(&point)?).0)
}

/// `dG_m(u) v` by central differences of tracked eigenpairs.
fn gradient_derivative(u: &PeriodicField, spectrum: &Spectrum, pos: usize, v: &PeriodicField, eps: f64) -> Result<PeriodicField> {
    let plus = tracked_gradient(&u.axpy(C64::new(eps, 0.0), v), spectrum, pos)?;
    let minus = tracked_gradient(&u.axpy(C64::new(-eps, 0.0), v), spectrum, pos)?;
    Ok((&plus - &minus).scale(C64::new(0.5 / eps, 0.0)))
}

/// Estimates `c_m = max_v |dG_m(u) v| / |v|` per index, the decay of `c_m` in
/// `|lambda_m|`, the partial sums of `c_m^2`, and the bilinear quantity
/// `<dG_m K_a, K_b> / (|K_a| |K_b|)` over tangent vectors of the scanned indices.
pub fn dg_bound_scan(
    u: &PeriodicField,
    directions: &[PeriodicField],
    indices: &[i64],
    window: (f64, f64),
    eps: f64,
) -> Result<ExperimentReport> {
    if !(1e-8..=1e-2).contains(&eps) {
        return Err(Error::InvalidArgument(format!("difference step {eps} outside [1e-8, 1e-2]")));
    }
    let spectrum = locate_spectrum(u, window)?;
    let solver = ZsSolver::new(u);
    let pairs = indexed_pairs(&solver, &spectrum, indices)?;
    let positions: Vec<usize> = indices.iter().map(|&m| spectrum.position(m).expect("indexed")).collect();
    let tangents: Vec<PeriodicField> = pairs.iter().map(|p| lambda_gradient(p).1).collect();
    let mut rep = ExperimentReport::new("dg_bound", &["index", "lambda", "c_m", "bilinear", "g_norm"]);
    rep.meta("grid_n", u.len()).meta("eps", eps).meta("directions", directions.len());
    window_meta(&mut rep, window);

    let rows: Vec<Result<(f64, f64)>> = positions
        .par_iter()
        .map(|&pos| {
            let mut c = 0.0f64;
            for v in directions {
                let vn = v.l2();
                if vn == 0.0 {
                    continue;
                }
                let dg = gradient_derivative(u, &spectrum, pos, v, eps)?;
                c = c.max(dg.l2() / vn);
            }
            let mut bilinear = 0.0f64;
            for ka in &tangents {
                let dg = gradient_derivative(u, &spectrum, pos, ka, eps)?;
                for kb in &tangents {
                    let q = real_pairing(&dg, kb)?.abs() / (ka.l2() * kb.l2());
                    bilinear = bilinear.max(q);
                }
            }
            Ok((c, bilinear))
        })
        .collect();

    let mut decay = Vec::new();
    let mut lost = false;
    let mut by_level: Vec<(i64, f64)> = Vec::new();
    for ((pair, &m), row) in pairs.iter().zip(indices).zip(rows) {
        let lambda = pair.point.lambda;
        let g_norm = lambda_gradient(pair).0.l2();
        match row {
            Ok((c, bilinear)) => {
                rep.info(format!("c_{m}"), vec![m as f64, lambda, c, bilinear, g_norm]);
                decay.push((lambda.abs(), c));
                by_level.push((m, c * c));
            }
            Err(Error::TrackingLost(_)) => {
                rep.push(format!("c_{m}"), vec![m as f64, lambda, f64::NAN, f64::NAN, g_norm], 0.0, Status::Inconclusive);
                lost = true;
            }
            Err(e) => return Err(e),
        }
    }
    if lost {
        return Ok(rep);
    }
    let slope = loglog_slope(&decay);
    rep.check("decay_slope", vec![f64::NAN, f64::NAN, slope, f64::NAN, f64::NAN], slope, -0.8);
    // partial sums of c_m^2 by |m|
    by_level.sort_by_key(|(m, _)| (m.abs(), *m));
    let mut sums: Vec<(i64, f64)> = Vec::new();
    let mut total = 0.0;
    for (m, c2) in by_level {
        total += c2;
        match sums.last_mut() {
            Some(last) if last.0 == m.abs() => last.1 = total,
            _ => sums.push((m.abs(), total)),
        }
    }
    for &(level, s) in &sums {
        rep.info(format!("sum_c_sq_{level}"), vec![level as f64, f64::NAN, s, f64::NAN, f64::NAN]);
    }
    let last_increment = match sums.len() {
        0 => 0.0,
        1 => 1.0,
        k => (sums[k - 1].1 - sums[k - 2].1) / sums[k - 1].1,
    };
    rep.check(
        "final_increment",
        vec![f64::NAN, f64::NAN, last_increment, f64::NAN, f64::NAN],
        last_increment,
        0.05,
    );
    if spectrum.has_ambiguous() {
        rep.meta("ambiguous", "true");
    }
    Ok(rep)
}

/// Spectral displacement, with multiplicity, between two spectra on one window;
/// `None` when the counts differ.
fn displacement(a: &Spectrum, b: &Spectrum) -> Option<f64> {
    let (x, y) = (a.with_multiplicity(), b.with_multiplicity());
    (x.len() == y.len()).then(|| x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
}

/// Displaces `u0` along `G` (transverse) and `K` (tangent) of the eigenvalue at
/// `index` and compares the spectral displacement with `|u_f - u0|`.
pub fn neighbor_level_set_scan(
    u0: &PeriodicField,
    index: i64,
    eps_list: &[f64],
    window: (f64, f64),
) -> Result<ExperimentReport> {
    let s0 = locate_spectrum(u0, window)?;
    let solver = ZsSolver::new(u0);
    let pair = indexed_pairs(&solver, &s0, &[index])?.remove(0);
    let (g, k) = lambda_gradient(&pair);
    let mut rep = ExperimentReport::new("neighbor_level_set", &["eps", "spectral", "potential", "ratio"]);
    rep.meta("grid_n", u0.len())
        .meta("index", index)
        .meta("lambda", pair.point.lambda);
    window_meta(&mut rep, window);

    let scan = |name: &str, dir: &PeriodicField, rep: &mut ExperimentReport| -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::new();
        for (i, &eps) in eps_list.iter().enumerate() {
            if eps == 0.0 {
                continue;
            }
            let uf = u0.axpy(C64::new(eps, 0.0), dir);
            let sf = locate_spectrum(&uf, window)?;
            let du = (&uf - u0).l2();
            match displacement(&sf, &s0) {
                Some(df) => {
                    rep.info(format!("{name}_{i}"), vec![eps, df, du, df / du]);
                    out.push((eps, df / du));
                }
                None => rep.push(format!("{name}_{i}"), vec![eps, f64::NAN, du, f64::NAN], 0.0, Status::Inconclusive),
            }
        }
        Ok(out)
    };
    let transverse = scan("transverse", &g, &mut rep)?;
    let tangent = scan("tangent", &k, &mut rep)?;
    if transverse.is_empty() {
        return Ok(rep);
    }
    let lo = transverse.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let hi = transverse.iter().map(|t| t.1).fold(0.0, f64::max);
    let spread = (hi - lo) / hi;
    rep.check("transverse_spread", vec![f64::NAN, lo, hi, spread], spread, 0.1);
    rep.push("transverse_floor", vec![f64::NAN, f64::NAN, f64::NAN, lo], 0.0, Status::judge(lo > 0.0));
    if tangent.len() > 1 {
        let order = loglog_slope(&tangent);
        rep.check("tangent_order", vec![f64::NAN, f64::NAN, f64::NAN, order], (order - 1.0).abs(), 0.2);
        let largest = tangent.iter().map(|t| t.1).fold(0.0, f64::max);
        rep.info("tangent_to_transverse", vec![f64::NAN, f64::NAN, f64::NAN, largest / lo]);
    }
    Ok(rep)
}

/// Samples `|u(t) - u0|` on `samples` equal steps up to `horizon`, refines each
/// local minimum by golden-section search and reports those below `tol`.
pub fn recurrence_scan(
    u0: &PeriodicField,
    flow: &FlowSpec,
    horizon: f64,
    samples: usize,
    tol: f64,
) -> Result<ExperimentReport> {
    if !(horizon > 0.0 && horizon.is_finite()) || samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "recurrence scan needs a positive horizon and at least 2 samples, got {horizon}, {samples}"
        )));
    }
    let h = horizon / samples as f64;
    let mut states = Vec::with_capacity(samples + 1);
    let mut dist = Vec::with_capacity(samples + 1);
    let mut u = u0.clone();
    for k in 0..=samples {
        if k > 0 {
            u = evolve(&u, &flow.with_time(h))?;
        }
        dist.push((&u - u0).l2());
        states.push(u.clone());
    }
    let mut rep = ExperimentReport::new("recurrence", &["t", "distance"]);
    rep.meta("grid_n", u0.len())
        .meta("horizon", horizon)
        .meta("samples", samples)
        .meta("flow", format!("{:?}", flow.kind));
    let mut found = 0;
    for k in 1..=samples {
        let left = dist[k - 1];
        let right = dist.get(k + 1).copied().unwrap_or(f64::INFINITY);
        if !(dist[k] <= left && dist[k] <= right) {
            continue;
        }
        let base = &states[k - 1];
        let span = if k < samples { 2.0 * h } else { h };
        let distance_at = |s: f64| -> Result<f64> { Ok((&evolve(base, &flow.with_time(s))? - u0).l2()) };
        let s = golden_max(|s| distance_at(s).map(|d| -d), 0.0, span, 1e-10 * (1.0 + horizon))?;
        let d = distance_at(s)?;
        let (t, d) = if d <= dist[k] { ((k - 1) as f64 * h + s, d) } else { (k as f64 * h, dist[k]) };
        if d >= tol {
            continue;
        }
        rep.info(format!("return_{found}"), vec![t, d]);
        found += 1;
    }
    rep.info("returns", vec![found as f64, f64::NAN]);
    Ok(rep)
}

/// Partial sums of `F_n^2` over gaps `|n| <= max_label`; judges the final increment.
pub fn square_summability(u: &PeriodicField, max_label: usize, plateau_from: usize) -> Result<ExperimentReport> {
    let window = gap_window(max_label);
    let spec_u = locate_spectrum(u, window)?;
    let zero = PeriodicField::zeros(u.grid());
    let spec_0 = locate_spectrum(&zero, window)?;
    let dev = spectral_deviation(&spec_u, &spec_0)?;
    let sums = partial_sums(&dev);
    let mut rep = ExperimentReport::new("square_summability", &["n", "partial_sum", "increment"]);
    rep.meta("grid_n", u.len()).meta("max_label", max_label);
    window_meta(&mut rep, window);
    let mut prev = 0.0;
    for &(n, s) in &sums {
        rep.info(format!("sum_{n}"), vec![n as f64, s, s - prev]);
        prev = s;
    }
    let total = sums.last().map(|s| s.1).unwrap_or(0.0);
    let frac = |x: f64| if total > 0.0 { x / total } else { 0.0 };
    let last = match sums.len() {
        0 | 1 => 0.0,
        k => frac(sums[k - 1].1 - sums[k - 2].1),
    };
    let final_label = sums.last().map(|s| s.0).unwrap_or(0);
    if final_label <= plateau_from as i64 {
        return Err(Error::InvalidArgument(format!(
            "window reaches gap {final_label}, not beyond {plateau_from}"
        )));
    }
    rep.check("final_increment", vec![final_label as f64, total, last], last, 0.01);
    let at = sums
        .iter()
        .rev()
        .find(|s| s.0 <= plateau_from as i64)
        .map(|s| s.1)
        .unwrap_or(0.0);
    rep.info("tail_beyond", vec![plateau_from as f64, total - at, frac(total - at)]);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::flows::Sign;
    use crate::potential::Potential;

    fn grid() -> Grid {
        Grid::new(64).unwrap()
    }

    #[test]
    fn eigenvalue_differences_match_pairing() {
        let u = Potential::Constant(1.0).field(grid()).unwrap();
        let dirs: Vec<PeriodicField> = (0..2)
            .map(|s| crate::potential::random_band_limited(grid(), 3, s).unwrap())
            .collect();
        let rep = gradient_identity_report(&u, &dirs, &[-1, 0], (-2.0, 2.0), 1e-4, 1e-4).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_failure());
        let order = rep.row("observed_order").unwrap().values[5];
        assert!((order - 2.0).abs() < 0.5, "{order}");
        // the double at sqrt(1 + pi^2) is not a differentiable eigenvalue
        let rep = gradient_identity_report(&u, &dirs, &[1], (-4.0, 4.0), 1e-4, 1e-4).unwrap();
        assert_eq!(rep.outcome(), crate::report::Outcome::Inconclusive);
        assert!(gradient_identity_report(&u, &dirs, &[0], (-2.0, 2.0), 1.0, 1e-4).is_err());
    }

    #[test]
    fn symmetries_commute_with_nls() {
        let u = Potential::Wave.field(grid()).unwrap();
        let flows = [
            ("m1", FlowSpec::hierarchy(1, 0.3)),
            ("nls", FlowSpec::nls(Sign::Defocusing, 1e-3, 0.1)),
            ("nls_again", FlowSpec::nls(Sign::Defocusing, 1e-3, 0.1)),
        ];
        let rep = commutation_report(&u, &flows, &[1e-3, 5e-4], 1e-6).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.rows.len(), 9);
        assert_eq!(rep.row("nls|nls_again@0.001").unwrap().values[1], 0.0);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, 3.0 / (k * k) as f64)).collect();
        assert!((loglog_slope(&pts) + 2.0).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_nan());
    }

    #[test]
    fn free_gradients_are_in_involution() {
        let u = PeriodicField::zeros(grid());
        let grads: Vec<(String, PeriodicField)> = (-3..=3)
            .map(|n| (format!("g{n}"), free_square(&u, n).scale(C64::new(0.0, 1.0))))
            .collect();
        let rep = bracket_table("free", &grads, 1e-7).unwrap();
        assert!(rep.passed());
        for r in rep.rows.iter().filter(|r| r.label.contains('|')) {
            assert!(r.values[0].abs() < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn translation_keeps_spectrum_exactly() {
        let u = Potential::Rich.field(grid()).unwrap();
        let rep = isospectral_drift(&u, &FlowSpec::hierarchy(2, 0.3), &[0.1, 0.3], (-6.0, 6.0), 6, 1e-9).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_failure());
    }

    #[test]
    fn free_gram_is_twice_identity() {
        let u = PeriodicField::zeros(grid());
        let rep = gram_basis_analysis(&u, &[2, 4]).unwrap();
        let row = rep.row("gram_4").unwrap();
        assert!(row.values[4] < 1e-10);
        assert!((row.values[3] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn span_contains_its_members() {
        let u = Potential::Constant(1.0).field(grid()).unwrap();
        let (_, pairs) = representatives(&u, 3).unwrap();
        let g = lambda_gradient(&pairs.iter().find(|(n, _)| *n == 2).unwrap().1).0;
        let rep = normal_tangent_residual(&u, &g, &[2, 3]).unwrap();
        assert!(rep.row("residual_2").unwrap().values[1] < 1e-8);
        let zero = PeriodicField::zeros(grid());
        let rep = normal_tangent_residual(&u, &zero, &[1, 2]).unwrap();
        assert_eq!(rep.row("residual_2").unwrap().values[1], 0.0);
    }

    #[test]
    fn zero_direction_has_zero_derivative() {
        let u = Potential::Rich.field(grid()).unwrap();
        let zero = PeriodicField::zeros(grid());
        let rep = dg_bound_scan(&u, &[zero], &[0, 1], (-6.0, 6.0), 1e-4).unwrap();
        assert_eq!(rep.row("c_0").unwrap().values[2], 0.0);
    }

    #[test]
    fn plane_wave_returns() {
        let a = C64::new(0.5, 0.0);
        let u0 = PeriodicField::from_modes(grid(), &[(1, a)]).unwrap();
        let flow = FlowSpec::nls(Sign::Defocusing, 1e-3, 1.0);
        let omega = 4.0 * PI * PI + 2.0 * a.norm_sqr();
        let rep = recurrence_scan(&u0, &flow, 0.4, 400, 1e-3).unwrap();
        let t = rep.row("return_0").unwrap().values[0];
        assert!((t - 2.0 * PI / omega).abs() < 1e-6, "{t}");
        let shift = recurrence_scan(&u0, &FlowSpec::hierarchy(2, 1.0), 1.2, 24, 1e-3).unwrap();
        let t = shift.row("return_0").unwrap().values[0];
        assert!((t - 1.0).abs() < 1e-7, "{t}");
    }
}
