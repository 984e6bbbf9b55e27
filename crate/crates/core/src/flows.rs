//! Time evolution: split-step NLS, closed-form hierarchy flows, RK4 for
//! Hamiltonian vector fields `u_t = i G(u)`, and commutation defects.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{fft_forward, fft_inverse, PeriodicField, C64, I};

/// Largest admissible `|t_final| / dt`.
pub const MAX_STEPS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    /// `i u_t + u_xx + g |u|^2 u = 0`
    Focusing,
    /// `i u_t + u_xx - g |u|^2 u = 0`
    Defocusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Focusing => 1.0,
            Sign::Defocusing => -1.0,
        }
    }
}

/// Cubic coupling `g` for which the NLS flow is the Hamiltonian flow of
/// `int |u_x|^2 + |u|^4` and preserves the ZS spectrum of `u`.
pub const INTEGRABLE_COUPLING: f64 = 2.0;

/// Symmetric second-order compositions of the nonlinear phase rotation `N` and
/// the free propagator `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Splitting {
    /// `N(h/2) L(h) N(h/2)`.
    Strang,
    /// `N(a h) L(h/2) N((1 - 2a) h) L(h/2) N(a h)` with the error-minimizing `a`.
    #[default]
    TwoStage,
}

/// Outer weight of the two-stage composition, minimizing the leading error term.
const TWO_STAGE_WEIGHT: f64 = 0.193_183_327_503_783_6;

pub type Gradient = Arc<dyn Fn(&PeriodicField) -> Result<PeriodicField> + Send + Sync>;

#[derive(Clone)]
pub enum FlowKind {
    Nls { sign: Sign, coupling: f64, splitting: Splitting },
    /// `m = 1` phase rotation, `m = 2` translation.
    Hierarchy(u8),
    /// `u_t = i G(u)` integrated by RK4.
    Generic(Gradient),
}

impl fmt::Debug for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowKind::Nls {
                sign,
                coupling,
                splitting,
            } => write!(f, "Nls({sign:?}, g = {coupling}, {splitting:?})"),
            FlowKind::Hierarchy(m) => write!(f, "Hierarchy({m})"),
            FlowKind::Generic(_) => f.write_str("Generic"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub dt: f64,
    pub t_final: f64,
}

impl FlowSpec {
    pub fn nls(sign: Sign, dt: f64, t_final: f64) -> Self {
        Self {
            kind: FlowKind::Nls {
                sign,
                coupling: INTEGRABLE_COUPLING,
                splitting: Splitting::default(),
            },
            dt,
            t_final,
        }
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        if let FlowKind::Nls { coupling, .. } = &mut self.kind {
            *coupling = g;
        }
        self
    }

    pub fn with_splitting(mut self, scheme: Splitting) -> Self {
        if let FlowKind::Nls { splitting, .. } = &mut self.kind {
            *splitting = scheme;
        }
        self
    }

    /// Closed-form flows ignore `dt`; it only has to be valid.
    pub fn hierarchy(m: u8, t_final: f64) -> Self {
        Self {
            kind: FlowKind::Hierarchy(m),
            dt: 1.0,
            t_final,
        }
    }

    pub fn generic(gradient: Gradient, dt: f64, t_final: f64) -> Self {
        Self {
            kind: FlowKind::Generic(gradient),
            dt,
            t_final,
        }
    }

    pub fn with_time(&self, t_final: f64) -> Self {
        Self {
            t_final,
            ..self.clone()
        }
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        Self { dt, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.dt)));
        }
        if !self.t_final.is_finite() {
            return Err(Error::InvalidArgument("final time must be finite".into()));
        }
        let steps = (self.t_final.abs() / self.dt).ceil();
        if steps > MAX_STEPS {
            return Err(Error::StepBudget {
                steps: steps as u64,
                limit: MAX_STEPS as u64,
            });
        }
        match self.kind {
            FlowKind::Hierarchy(m) if !(m == 1 || m == 2) => Err(Error::InvalidArgument(format!(
                "closed-form hierarchy flows exist for m = 1, 2 only, got {m}"
            ))),
            FlowKind::Nls { coupling, .. } if !coupling.is_finite() => {
                Err(Error::InvalidArgument("non-finite coupling".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Runs any flow to `spec.t_final`.
pub fn evolve(u0: &PeriodicField, spec: &FlowSpec) -> Result<PeriodicField> {
    spec.validate()?;
    match &spec.kind {
        FlowKind::Nls { .. } => evolve_nls(u0, spec),
        FlowKind::Hierarchy(m) => hierarchy_flow(u0, *m, spec.t_final),
        FlowKind::Generic(g) => gradient_flow(u0, |u| g(u), spec.dt, spec.t_final),
    }
}

/// Operator splitting of the NLS equation. Both substeps are exact and
/// preserve `|u|` in L2.
#[derive(Debug, Clone)]
pub struct SplitStep {
    sign: Sign,
    coupling: f64,
    splitting: Splitting,
    dt: f64,
}

impl SplitStep {
    pub fn new(spec: &FlowSpec) -> Result<Self> {
        spec.validate()?;
        match spec.kind {
            FlowKind::Nls {
                sign,
                coupling,
                splitting,
            } => Ok(Self {
                sign,
                coupling,
                splitting,
                dt: spec.dt,
            }),
            _ => Err(Error::InvalidArgument("split-step needs an NLS flow".into())),
        }
    }

    fn rotate(&self, buf: &mut [C64], h: f64) {
        let rate = self.sign.value() * self.coupling * h;
        for z in buf.iter_mut() {
            *z *= C64::from_polar(1.0, rate * z.norm_sqr());
        }
    }

    fn propagate(buf: &mut [C64], factors: &[C64]) {
        fft_forward(buf);
        for (z, l) in buf.iter_mut().zip(factors) {
            *z *= l;
        }
        fft_inverse(buf);
    }

    fn step(&self, buf: &mut [C64], lin: &Propagators, h: f64) {
        match self.splitting {
            Splitting::Strang => {
                self.rotate(buf, 0.5 * h);
                Self::propagate(buf, &lin.full);
                self.rotate(buf, 0.5 * h);
            }
            Splitting::TwoStage => {
                let a = TWO_STAGE_WEIGHT;
                self.rotate(buf, a * h);
                Self::propagate(buf, &lin.half);
                self.rotate(buf, (1.0 - 2.0 * a) * h);
                Self::propagate(buf, &lin.half);
                self.rotate(buf, a * h);
            }
        }
    }

    fn linear_factors(u: &PeriodicField, h: f64) -> Vec<C64> {
        let grid = u.grid();
        let scale = 1.0 / grid.len() as f64;
        (0..grid.len())
            .map(|j| {
                let k = 2.0 * PI * grid.wavenumber(j) as f64;
                C64::from_polar(scale, -k * k * h)
            })
            .collect()
    }

    fn propagators(u: &PeriodicField, h: f64) -> Propagators {
        Propagators {
            full: Self::linear_factors(u, h),
            half: Self::linear_factors(u, 0.5 * h),
        }
    }

    /// Advances by `duration` (any sign): full steps then one shorter step.
    pub fn advance(&self, u: &PeriodicField, duration: f64) -> Result<PeriodicField> {
        let dir = duration.signum();
        let full = (duration.abs() / self.dt).floor();
        let mut rest = duration.abs() - full * self.dt;
        if rest <= 1e-12 * self.dt {
            rest = 0.0;
        }
        if full > MAX_STEPS {
            return Err(Error::StepBudget {
                steps: full as u64,
                limit: MAX_STEPS as u64,
            });
        }
        let full = full as u64;
        let mut buf = u.samples().to_vec();
        let lin = Self::propagators(u, dir * self.dt);
        for step in 0..full {
            self.step(&mut buf, &lin, dir * self.dt);
            if step % 64 == 63 || step + 1 == full {
                check_finite(&buf, step)?;
            }
        }
        if rest > 0.0 {
            let lin = Self::propagators(u, dir * rest);
            self.step(&mut buf, &lin, dir * rest);
            check_finite(&buf, full)?;
        }
        PeriodicField::from_samples(u.grid(), buf).map_err(|_| Error::Diverged { step: full })
    }
}

struct Propagators {
    full: Vec<C64>,
    half: Vec<C64>,
}

fn check_finite(buf: &[C64], step: u64) -> Result<()> {
    if buf.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { step })
    }
}

pub fn evolve_nls(u0: &PeriodicField, spec: &FlowSpec) -> Result<PeriodicField> {
    SplitStep::new(spec)?.advance(u0, spec.t_final)
}

/// Exact flows of the first two invariants: `e^{it} u0` and `u0(x - t)`.
pub fn hierarchy_flow(u0: &PeriodicField, m: u8, t: f64) -> Result<PeriodicField> {
    match m {
        1 => Ok(u0.scale(C64::from_polar(1.0, t))),
        2 => Ok(u0.translate(t)),
        _ => Err(Error::InvalidArgument(format!("hierarchy flow m = {m} has no closed form"))),
    }
}

/// Classical RK4 on `u_t = i G(u)`.
pub fn gradient_flow<G>(u0: &PeriodicField, gradient: G, dt: f64, t_final: f64) -> Result<PeriodicField>
where
    G: Fn(&PeriodicField) -> Result<PeriodicField>,
{
    if !(dt > 0.0 && dt.is_finite() && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad time stepping dt = {dt}, t = {t_final}")));
    }
    let steps = (t_final.abs() / dt).ceil();
    if steps > MAX_STEPS {
        return Err(Error::StepBudget {
            steps: steps as u64,
            limit: MAX_STEPS as u64,
        });
    }
    let steps = steps as u64;
    if steps == 0 {
        return Ok(u0.clone());
    }
    let h = t_final / steps as f64;
    let rhs = |u: &PeriodicField| -> Result<PeriodicField> {
        let g = gradient(u)?;
        u.check_same_grid(&g)?;
        Ok(g.scale(I))
    };
    let mut u = u0.clone();
    for step in 0..steps {
        let k1 = rhs(&u)?;
        let k2 = rhs(&u.axpy(C64::new(0.5 * h, 0.0), &k1))?;
        let k3 = rhs(&u.axpy(C64::new(0.5 * h, 0.0), &k2))?;
        let k4 = rhs(&u.axpy(C64::new(h, 0.0), &k3))?;
        let incr = &(&(&k1 + &k4) + &(&k2 + &k3)) + &(&k2 + &k3);
        u = u.axpy(C64::new(h / 6.0, 0.0), &incr);
        check_finite(u.samples(), step)?;
    }
    Ok(u)
}

/// `|A(B(u0)) - B(A(u0))|` in L2.
pub fn commutation_defect(u0: &PeriodicField, a: &FlowSpec, b: &FlowSpec) -> Result<f64> {
    let ab = evolve(&evolve(u0, b)?, a)?;
    let ba = evolve(&evolve(u0, a)?, b)?;
    Ok((&ab - &ba).l2())
}
