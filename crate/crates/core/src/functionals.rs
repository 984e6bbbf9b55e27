//! Conserved functionals, their gradients under the real pairing, the Poisson
//! bracket with `J = i`, and a priori bounds derived from them.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{interpolation_report, real_pairing, PeriodicField, C64, I};
use crate::flows::{evolve, FlowSpec, Sign, SplitStep, INTEGRABLE_COUPLING};
use crate::report::{ExperimentReport, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvariantId {
    I1,
    I2,
    I3,
    I5,
}

impl InvariantId {
    pub const ALL: [InvariantId; 4] = [InvariantId::I1, InvariantId::I2, InvariantId::I3, InvariantId::I5];

    pub fn index(self) -> u32 {
        match self {
            InvariantId::I1 => 1,
            InvariantId::I2 => 2,
            InvariantId::I3 => 3,
            InvariantId::I5 => 5,
        }
    }
}

impl TryFrom<u32> for InvariantId {
    type Error = Error;

    fn try_from(m: u32) -> Result<Self> {
        match m {
            1 => Ok(InvariantId::I1),
            2 => Ok(InvariantId::I2),
            3 => Ok(InvariantId::I3),
            5 => Ok(InvariantId::I5),
            _ => Err(Error::UnknownInvariant(m)),
        }
    }
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I{}", self.index())
    }
}

fn real_integral(what: &'static str, density: &PeriodicField) -> Result<f64> {
    let z = density.integral();
    let scale = density.samples().iter().map(|s| s.norm()).sum::<f64>() / density.len() as f64;
    if z.im.abs() > 1e-10 * (1.0 + scale) {
        return Err(Error::ImaginaryResidue { what, residue: z.im });
    }
    Ok(z.re)
}

fn modulus_sq(u: &PeriodicField) -> PeriodicField {
    u.map(|z| C64::new(z.norm_sqr(), 0.0))
}

fn density(id: InvariantId, u: &PeriodicField) -> PeriodicField {
    let ux = u.derivative(1);
    match id {
        InvariantId::I1 => modulus_sq(u),
        InvariantId::I2 => u
            .zip_map(&ux, |z, zx| z.conj() * zx - z * zx.conj())
            .scale(I * 0.5),
        InvariantId::I3 => ux.zip_map(u, |zx, z| C64::new(zx.norm_sqr() + z.norm_sqr().powi(2), 0.0)),
        InvariantId::I5 => Weight5::integrable().density(u),
    }
}

/// Weight-5 invariant of `u_t = i u_xx + i s g |u|^2 u` (`s = sign.value()`):
/// `int |u_xx|^2 + b |u|^6 + c ((|u|^2)_x)^2 + d |u_x|^2 |u|^2`
/// with `b = g^2 / 2`, `c = -s g / 2`, `d = -3 s g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight5 {
    pub sign: Sign,
    pub coupling: f64,
}

impl Weight5 {
    pub fn new(sign: Sign, coupling: f64) -> Self {
        Weight5 { sign, coupling }
    }

    /// The normalization shared with `I3` and the default NLS flow.
    pub fn integrable() -> Self {
        Weight5::new(Sign::Defocusing, INTEGRABLE_COUPLING)
    }

    /// `(b, c, d)`.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        let g = self.coupling;
        let s = self.sign.value();
        (0.5 * g * g, -0.5 * s * g, -3.0 * s * g)
    }

    fn density(&self, u: &PeriodicField) -> PeriodicField {
        let (b, c, d) = self.coefficients();
        let ux = u.derivative(1);
        let uxx = u.derivative(2);
        let rho_x = modulus_sq(u).derivative(1);
        let (s, sx, sxx, rx) = (u.samples(), ux.samples(), uxx.samples(), rho_x.samples());
        let samples = (0..u.len())
            .map(|j| {
                let r = s[j].norm_sqr();
                let v = sxx[j].norm_sqr() + b * r.powi(3) + c * rx[j].re.powi(2) + d * sx[j].norm_sqr() * r;
                C64::new(v, 0.0)
            })
            .collect();
        PeriodicField::from_samples(u.grid(), samples).expect("finite density")
    }

    pub fn eval(&self, u: &PeriodicField) -> Result<f64> {
        real_integral("weight-5 invariant", &self.density(u))
    }

    /// `u_xxxx + 3 b |u|^4 u - 2 c (|u|^2)_xx u + d (|u_x|^2 u - (|u|^2 u_x)_x)`.
    pub fn gradient(&self, u: &PeriodicField) -> PeriodicField {
        let (b, c, d) = self.coefficients();
        let ux = u.derivative(1);
        let rho = modulus_sq(u);
        let rho_xx = rho.derivative(2);
        let flux = rho.pointwise(&ux).derivative(1);
        let (s, sx, rxx) = (u.samples(), ux.samples(), rho_xx.samples());
        let local = (0..u.len())
            .map(|j| {
                let r = s[j].norm_sqr();
                s[j] * (3.0 * b * r * r - 2.0 * c * rxx[j].re + d * sx[j].norm_sqr())
            })
            .collect();
        let local = PeriodicField::from_samples(u.grid(), local).expect("finite gradient");
        &(&u.derivative(4) + &local) - &flux.scale(C64::new(d, 0.0))
    }
}

/// `I1 = int |u|^2`, `I2 = (i/2) int (conj(u) u_x - u conj(u_x))`,
/// `I3 = int |u_x|^2 + |u|^4`,
/// `I5 = int |u_xx|^2 + 2 |u|^6 + ((|u|^2)_x)^2 + 6 |u_x|^2 |u|^2`, see [`Weight5::integrable`].
pub fn invariant_eval(id: InvariantId, u: &PeriodicField) -> Result<f64> {
    real_integral("invariant", &density(id, u))
}

/// Gradient with respect to `conj(u)` under `<u, v> = int (u conj(v) + v conj(u))`.
pub fn invariant_gradient(id: InvariantId, u: &PeriodicField) -> PeriodicField {
    match id {
        InvariantId::I1 => u.clone(),
        InvariantId::I2 => u.derivative(1).scale(I),
        InvariantId::I3 => {
            let cubic = u.map(|z| 2.0 * z.norm_sqr() * z);
            &cubic - &u.derivative(2)
        }
        InvariantId::I5 => Weight5::integrable().gradient(u),
    }
}

/// `{F, H} = <G_F, i G_H>`.
pub fn poisson_bracket(g_f: &PeriodicField, g_h: &PeriodicField) -> Result<f64> {
    real_pairing(g_f, &g_h.scale(I))
}

fn norms(u: &PeriodicField) -> (f64, f64, f64, f64) {
    (u.l2(), u.derivative(1).l2(), u.derivative(2).l2(), u.sup())
}

/// Bound on `|u_x|^2` and `|u_xx|^2` from the invariants alone.
fn invariant_bounds(i3: f64, i5: f64) -> (f64, f64) {
    (i3.max(0.0), i5.max(0.0))
}

/// Each link of the chain bounding `|u_x|` and `|u_xx|` by the invariants.
pub fn apriori_bound_report(u: &PeriodicField) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("apriori_bounds", &["lhs", "rhs", "margin"]);
    rep.meta("grid_n", u.len());
    rep.meta("quartic_term", "pointwise |u|^4 under the integral");
    let (l2, ux, uxx, sup) = norms(u);
    let i1 = invariant_eval(InvariantId::I1, u)?;
    let i3 = invariant_eval(InvariantId::I3, u)?;
    let i5 = invariant_eval(InvariantId::I5, u)?;
    let tiny = 1e-12 * (1.0 + i1.abs() + i3.abs() + i5.abs());
    let mut row = |label: &str, lhs: f64, rhs: f64| {
        let ok = lhs <= rhs + tiny;
        rep.push(label, vec![lhs, rhs, rhs - lhs], tiny, Status::judge(ok));
    };

    row("l2_sq_vs_i1", (l2 * l2 - i1).abs(), 0.0);
    row("sup_sq_constant_safe", sup * sup, l2 * l2 + 2.0 * l2 * ux);
    let mean = u.integral();
    let centered = u.map(|z| z - mean);
    let sup_rep = interpolation_report(&centered, 0, 1, f64::INFINITY)?;
    row("sup_mean_zero", sup_rep.lhs, sup_rep.rhs);
    let l6_rep = interpolation_report(&centered, 0, 1, 6.0)?;
    row("l6_mean_zero", l6_rep.lhs, l6_rep.rhs);

    // |u_x|^2 = I3 - int |u|^4 <= I3
    row("ux_sq_vs_i3", ux * ux, i3);
    // focusing energy E = int |u_x|^2 - |u|^4 gives |u_x|^2 <= E + |u|_inf^2 I1
    let quartic = i3 - ux * ux;
    let energy = ux * ux - quartic;
    row("ux_sq_focusing_chain", ux * ux, energy + (l2 * l2 + 2.0 * l2 * ux) * i1);
    row("uxx_sq_vs_i5", uxx * uxx, i5);
    // rho_x^2 <= 4 |u|_inf^2 |u_x|^2 absorbs the indefinite terms
    let focusing = Weight5::new(Sign::Focusing, INTEGRABLE_COUPLING).eval(u)?;
    row("uxx_sq_focusing_chain", uxx * uxx, focusing + 10.0 * sup * sup * ux * ux);
    let (bx, bxx) = invariant_bounds(i3, i5);
    row("ux_sq_invariant_bound", ux * ux, bx);
    row("uxx_sq_invariant_bound", uxx * uxx, bxx);
    Ok(rep)
}

/// Invariants before and after `evolve(u0, spec)`: `I1` by absolute drift (the
/// splitting preserves it exactly), the others by relative drift.
pub fn conservation_report(u0: &PeriodicField, spec: &FlowSpec) -> Result<ExperimentReport> {
    let u1 = evolve(u0, spec)?;
    let mut rep = ExperimentReport::new("conservation", &["initial", "final", "drift"]);
    rep.meta("grid_n", u0.len())
        .meta("dt", spec.dt)
        .meta("t_final", spec.t_final)
        .meta("flow", format!("{:?}", spec.kind));
    // |I2| <= sqrt(I1 I3) sets the scale when I2 itself vanishes
    let scale = (invariant_eval(InvariantId::I1, u0)? * invariant_eval(InvariantId::I3, u0)?)
        .abs()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for id in InvariantId::ALL {
        let a = invariant_eval(id, u0)?;
        let b = invariant_eval(id, &u1)?;
        let denom = if a.abs() > 1e-12 * scale { a.abs() } else { scale };
        let (drift, tol) = match id {
            InvariantId::I1 => ((b - a).abs(), 1e-10),
            _ => ((b - a).abs() / denom, 1e-6),
        };
        rep.check(id.to_string(), vec![a, b, drift], drift, tol);
    }
    Ok(rep)
}

/// Samples an NLS trajectory and compares the running maxima of `|u_x|^2`,
/// `|u_xx|^2` with the bounds computed from the invariants at `t = 0`.
pub fn apriori_trajectory_report(u0: &PeriodicField, spec: &FlowSpec, samples: usize) -> Result<ExperimentReport> {
    let stepper = SplitStep::new(spec)?;
    let i3 = invariant_eval(InvariantId::I3, u0)?;
    let i5 = invariant_eval(InvariantId::I5, u0)?;
    let (bx, bxx) = invariant_bounds(i3, i5);
    let mut rep = ExperimentReport::new("apriori_trajectory", &["t", "ux_sq", "ux_bound", "uxx_sq", "uxx_bound"]);
    rep.meta("grid_n", u0.len()).meta("dt", spec.dt).meta("t_final", spec.t_final);
    let samples = samples.max(1);
    let mut u = u0.clone();
    let (mut max_x, mut max_xx) = (0.0f64, 0.0f64);
    for k in 0..=samples {
        let t = spec.t_final * k as f64 / samples as f64;
        if k > 0 {
            u = stepper.advance(&u, spec.t_final / samples as f64)?;
        }
        let (_, ux, uxx, _) = norms(&u);
        max_x = max_x.max(ux * ux);
        max_xx = max_xx.max(uxx * uxx);
        rep.info(format!("t_{k}"), vec![t, ux * ux, bx, uxx * uxx, bxx]);
    }
    let slack = 1e-9 * (1.0 + bx);
    rep.push("sup_ux_sq", vec![spec.t_final, max_x, bx], slack, Status::judge(max_x <= bx * (1.0 + 1e-6) + slack));
    let slack = 1e-9 * (1.0 + bxx);
    rep.push(
        "sup_uxx_sq",
        vec![spec.t_final, f64::NAN, f64::NAN, max_xx, bxx],
        slack,
        Status::judge(max_xx <= bxx * (1.0 + 1e-6) + slack),
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::potential::Potential;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(64).unwrap()
    }

    #[test]
    fn plane_wave_values() {
        let a = C64::new(0.8, 0.6) * 0.7;
        let n = 2;
        let u = PeriodicField::from_modes(grid(), &[(n, a)]).unwrap();
        let k = 2.0 * PI * n as f64;
        let s = a.norm_sqr();
        let val = |id| invariant_eval(id, &u).unwrap();
        assert!((val(InvariantId::I1) - s).abs() < 1e-13);
        assert!((val(InvariantId::I2) + k * s).abs() < 1e-11);
        assert!((val(InvariantId::I3) - (k * k * s + s * s)).abs() < 1e-10);
        let i5 = k.powi(4) * s + 2.0 * s.powi(3) + 6.0 * k * k * s * s;
        assert!((val(InvariantId::I5) - i5).abs() < 1e-8 * i5.abs());
        let unit = Weight5::new(Sign::Focusing, 1.0).eval(&u).unwrap();
        let expect = k.powi(4) * s + 0.5 * s.powi(3) - 3.0 * k * k * s * s;
        assert!((unit - expect).abs() < 1e-8 * expect.abs());
        let zero = PeriodicField::zeros(grid());
        for id in InvariantId::ALL {
            assert_eq!(invariant_eval(id, &zero).unwrap(), 0.0);
        }
    }

    #[test]
    fn ids() {
        assert_eq!(InvariantId::try_from(5).unwrap(), InvariantId::I5);
        assert!(matches!(InvariantId::try_from(4), Err(Error::UnknownInvariant(4))));
        assert_eq!(InvariantId::I3.to_string(), "I3");
    }

    #[test]
    fn i3_gradient_of_plane_wave() {
        let e = PeriodicField::from_modes(grid(), &[(1, C64::new(1.0, 0.0))]).unwrap();
        let g = invariant_gradient(InvariantId::I3, &e);
        assert!((&g - &e.scale(C64::new(4.0 * PI * PI + 2.0, 0.0))).sup() < 1e-10);
    }

    #[test]
    fn weight5_gradient_matches_differences() {
        let u = Potential::Rich.field(grid()).unwrap();
        let v = PeriodicField::from_modes(grid(), &[(-2, C64::new(0.3, -0.1)), (3, C64::new(0.2, 0.4))]).unwrap();
        for w in [Weight5::integrable(), Weight5::new(Sign::Focusing, 1.0), Weight5::new(Sign::Defocusing, 0.7)] {
            let fd = crate::oracle::fd_directional(|z| w.eval(z), &u, &v, 1e-4).unwrap();
            let exact = real_pairing(&w.gradient(&u), &v).unwrap();
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{w:?}: {fd} vs {exact}");
        }
    }

    #[test]
    fn brackets_vanish() {
        let u = Potential::Rich.field(grid()).unwrap();
        let g: Vec<PeriodicField> = InvariantId::ALL.iter().map(|&id| invariant_gradient(id, &u)).collect();
        for a in &g {
            assert!(poisson_bracket(a, a).unwrap().abs() < 1e-10 * (1.0 + a.l2().powi(2)));
            for b in &g {
                let ab = poisson_bracket(a, b).unwrap();
                let ba = poisson_bracket(b, a).unwrap();
                assert!((ab + ba).abs() < 1e-12 * (1.0 + a.l2() * b.l2()));
                assert!(ab.abs() < 1e-7 * (1.0 + a.l2() * b.l2()), "{ab}");
            }
        }
    }

    #[test]
    fn apriori_rows() {
        let zero = PeriodicField::zeros(grid());
        let rep = apriori_bound_report(&zero).unwrap();
        assert!(rep.passed());
        assert!(rep.rows.iter().all(|r| r.values[0] == 0.0 && r.values[1] == 0.0));
        let s = PeriodicField::make(grid(), |x| C64::new(0.5, 0.5) * (2.0 * PI * x).sin()).unwrap();
        assert!(apriori_bound_report(&s).unwrap().passed());
        let w = Potential::Wave.field(grid()).unwrap();
        assert!(apriori_bound_report(&w).unwrap().passed());
    }
}
