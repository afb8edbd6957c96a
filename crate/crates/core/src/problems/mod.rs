//! Benchmark initial value problems in residual form `G(t, u, u̇) = 0`.
//!
//! Every problem carries two views of the same ODE: the residual (with its
//! analytic partials) used to build the collocation cost, and an explicit
//! right-hand side `u̇ = f(t, u)` used by the RK4 reference integrator.

mod rk4;

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use rk4::{rk4_solve, Trajectory};

/// An ODE system expressed through its residual.
///
/// Partial derivative matrices are `o × o`, row-major, with entry `[q * o + r]`
/// holding `∂G_q/∂u_r` (or `∂G_q/∂u̇_r`).
pub trait OdeSystem: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn residual(&self, t: f64, u: &[f64], du: &[f64], g: &mut [f64]);

    fn partials(&self, t: f64, u: &[f64], du: &[f64], dg_du: &mut [f64], dg_ddu: &mut [f64]);

    /// Explicit right-hand side solving `G(t, u, f) = 0` for `f`.
    fn rhs(&self, t: f64, u: &[f64], f: &mut [f64]);

    /// Writes the closed-form solution into `out`, if one exists.
    fn exact(&self, _t: f64, _out: &mut [f64]) -> bool {
        false
    }

    fn has_exact(&self) -> bool {
        false
    }
}

/// Per-problem experiment settings: verification bound and learning increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemDefaults {
    pub sigma: f64,
    pub increments: usize,
}

/// Published full-domain outcome of a benchmark, used only for comparison output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedResult {
    pub subdomains: usize,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
}

#[derive(Clone)]
pub struct IvpProblem {
    name: String,
    description: String,
    t_start: f64,
    t_end: f64,
    initial: Vec<f64>,
    system: Arc<dyn OdeSystem>,
    defaults: ProblemDefaults,
    published: Option<PublishedResult>,
}

impl fmt::Debug for IvpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpProblem")
            .field("name", &self.name)
            .field("domain", &(self.t_start, self.t_end))
            .field("initial", &self.initial)
            .field("system", &self.system)
            .finish()
    }
}

impl IvpProblem {
    pub fn new(
        name: impl Into<String>,
        (t_start, t_end): (f64, f64),
        initial: Vec<f64>,
        system: Arc<dyn OdeSystem>,
    ) -> Result<Self> {
        if !(t_start < t_end) {
            return Err(Error::DegenerateInterval {
                left: t_start,
                right: t_end,
            });
        }
        if initial.len() != system.dim() {
            return Err(Error::DimensionMismatch {
                model: initial.len(),
                problem: system.dim(),
            });
        }
        Ok(Self {
            name: name.into(),
            description: String::new(),
            t_start,
            t_end,
            initial,
            system,
            defaults: ProblemDefaults {
                sigma: 1e-5,
                increments: 5,
            },
            published: None,
        })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_defaults(mut self, defaults: ProblemDefaults) -> Self {
        self.defaults = defaults;
        self
    }

    fn with_published(mut self, published: PublishedResult) -> Self {
        self.published = Some(published);
        self
    }

    /// Same problem on `[t_start, t_end]` with a different right end.
    pub fn with_t_end(mut self, t_end: f64) -> Result<Self> {
        if !(self.t_start < t_end) {
            return Err(Error::DegenerateInterval {
                left: self.t_start,
                right: t_end,
            });
        }
        self.t_end = t_end;
        self.published = None;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn defaults(&self) -> ProblemDefaults {
        self.defaults
    }

    pub fn published(&self) -> Option<PublishedResult> {
        self.published
    }

    pub fn system(&self) -> &dyn OdeSystem {
        self.system.as_ref()
    }

    pub fn residual(&self, t: f64, u: &[f64], du: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.system.residual(t, u, du, &mut g);
        g
    }

    pub fn rhs(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.dim()];
        self.system.rhs(t, u, &mut f);
        f
    }

    pub fn has_exact(&self) -> bool {
        self.system.has_exact()
    }

    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.system.exact(t, &mut out).then_some(out)
    }
}

/// `ψ̇ − t·sin(10t) + ψ = 0`, the constant-coefficient benchmark.
#[derive(Debug, Clone, Copy, Default)]
pub struct ForcedDecay;

impl ForcedDecay {
    fn forcing(t: f64) -> f64 {
        t * (10.0 * t).sin()
    }
}

impl OdeSystem for ForcedDecay {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, t: f64, u: &[f64], du: &[f64], g: &mut [f64]) {
        g[0] = du[0] - Self::forcing(t) + u[0];
    }

    fn partials(&self, _t: f64, _u: &[f64], _du: &[f64], dg_du: &mut [f64], dg_ddu: &mut [f64]) {
        dg_du[0] = 1.0;
        dg_ddu[0] = 1.0;
    }

    fn rhs(&self, t: f64, u: &[f64], f: &mut [f64]) {
        f[0] = Self::forcing(t) - u[0];
    }

    fn exact(&self, t: f64, out: &mut [f64]) -> bool {
        let (s, c) = (10.0 * t).sin_cos();
        out[0] = s * (99.0 / 10201.0 + t / 101.0) + c * (20.0 / 10201.0 - 10.0 * t / 101.0)
            - 10221.0 / 10201.0 * (-t).exp();
        true
    }

    fn has_exact(&self) -> bool {
        true
    }
}

/// `φ̇ + (1 + eᵗcos(t)/1000)/(1+t²) + 2t/(1+t²)·φ = 0`, non-constant coefficients.
#[derive(Debug, Clone, Copy, Default)]
pub struct RationalGrowth;

impl RationalGrowth {
    fn source(t: f64) -> f64 {
        (1.0 + t.exp() * t.cos() / 1000.0) / (1.0 + t * t)
    }

    fn coefficient(t: f64) -> f64 {
        2.0 * t / (1.0 + t * t)
    }
}

impl OdeSystem for RationalGrowth {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, t: f64, u: &[f64], du: &[f64], g: &mut [f64]) {
        g[0] = du[0] + Self::source(t) + Self::coefficient(t) * u[0];
    }

    fn partials(&self, t: f64, _u: &[f64], _du: &[f64], dg_du: &mut [f64], dg_ddu: &mut [f64]) {
        dg_du[0] = Self::coefficient(t);
        dg_ddu[0] = 1.0;
    }

    fn rhs(&self, t: f64, u: &[f64], f: &mut [f64]) {
        f[0] = -Self::source(t) - Self::coefficient(t) * u[0];
    }

    fn exact(&self, t: f64, out: &mut [f64]) -> bool {
        let e = t.exp();
        let (s, c) = t.sin_cos();
        out[0] = (-t - e * c / 2000.0 - e * s / 2000.0 + 10001.0 / 2000.0) / (1.0 + t * t);
        true
    }

    fn has_exact(&self) -> bool {
        true
    }
}

/// `ω̇ / (cos²(ω) cos²(2t)) − 2 = 0`, the non-linear benchmark.
///
/// The residual keeps the implicit form; only `rhs` is rearranged to
/// `ω̇ = 2 cos²(ω) cos²(2t)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonlinearSaddle;

impl OdeSystem for NonlinearSaddle {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, t: f64, u: &[f64], du: &[f64], g: &mut [f64]) {
        let cu = u[0].cos();
        let ct = (2.0 * t).cos();
        g[0] = du[0] / (cu * cu) / (ct * ct) - 2.0;
    }

    fn partials(&self, t: f64, u: &[f64], du: &[f64], dg_du: &mut [f64], dg_ddu: &mut [f64]) {
        let (su, cu) = u[0].sin_cos();
        let ct = (2.0 * t).cos();
        let inv = 1.0 / (cu * cu * ct * ct);
        dg_ddu[0] = inv;
        // d/dω sec²(ω) = 2 sec²(ω) tan(ω)
        dg_du[0] = du[0] * inv * 2.0 * su / cu;
    }

    fn rhs(&self, t: f64, u: &[f64], f: &mut [f64]) {
        let cu = u[0].cos();
        let ct = (2.0 * t).cos();
        f[0] = 2.0 * cu * cu * ct * ct;
    }

    fn exact(&self, t: f64, out: &mut [f64]) -> bool {
        out[0] = (0.25 * (4.0 * t).sin() + t + 1.0).atan();
        true
    }

    fn has_exact(&self) -> bool {
        true
    }
}

/// Predator-prey system `τ̇ = Aτ − Bτκ`, `κ̇ = −Cκ + Dτκ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LotkaVolterra {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for LotkaVolterra {
    fn default() -> Self {
        Self {
            a: 1.5,
            b: 1.0,
            c: 3.0,
            d: 1.0,
        }
    }
}

impl OdeSystem for LotkaVolterra {
    fn dim(&self) -> usize {
        2
    }

    fn residual(&self, _t: f64, u: &[f64], du: &[f64], g: &mut [f64]) {
        let (prey, pred) = (u[0], u[1]);
        g[0] = du[0] - self.a * prey + self.b * prey * pred;
        g[1] = du[1] + self.c * pred - self.d * prey * pred;
    }

    fn partials(&self, _t: f64, u: &[f64], _du: &[f64], dg_du: &mut [f64], dg_ddu: &mut [f64]) {
        let (prey, pred) = (u[0], u[1]);
        dg_du[0] = -self.a + self.b * pred;
        dg_du[1] = self.b * prey;
        dg_du[2] = -self.d * pred;
        dg_du[3] = self.c - self.d * prey;
        dg_ddu.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
    }

    fn rhs(&self, _t: f64, u: &[f64], f: &mut [f64]) {
        let (prey, pred) = (u[0], u[1]);
        f[0] = self.a * prey - self.b * prey * pred;
        f[1] = -self.c * pred + self.d * prey * pred;
    }
}

/// `u̇ + λu = 0` with closed form `u₀ e^{−λ(t−t₀)}`. Handy for tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialDecay {
    pub rate: f64,
    pub t0: f64,
    pub u0: f64,
}

impl OdeSystem for ExponentialDecay {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, _t: f64, u: &[f64], du: &[f64], g: &mut [f64]) {
        g[0] = du[0] + self.rate * u[0];
    }

    fn partials(&self, _t: f64, _u: &[f64], _du: &[f64], dg_du: &mut [f64], dg_ddu: &mut [f64]) {
        dg_du[0] = self.rate;
        dg_ddu[0] = 1.0;
    }

    fn rhs(&self, _t: f64, u: &[f64], f: &mut [f64]) {
        f[0] = -self.rate * u[0];
    }

    fn exact(&self, t: f64, out: &mut [f64]) -> bool {
        out[0] = self.u0 * (-self.rate * (t - self.t0)).exp();
        true
    }

    fn has_exact(&self) -> bool {
        true
    }
}

/// `u̇ = 0`: the solution is the initial value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub u0: f64,
}

impl OdeSystem for Constant {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, _t: f64, _u: &[f64], du: &[f64], g: &mut [f64]) {
        g[0] = du[0];
    }

    fn partials(&self, _t: f64, _u: &[f64], _du: &[f64], dg_du: &mut [f64], dg_ddu: &mut [f64]) {
        dg_du[0] = 0.0;
        dg_ddu[0] = 1.0;
    }

    fn rhs(&self, _t: f64, _u: &[f64], f: &mut [f64]) {
        f[0] = 0.0;
    }

    fn exact(&self, _t: f64, out: &mut [f64]) -> bool {
        out[0] = self.u0;
        true
    }

    fn has_exact(&self) -> bool {
        true
    }
}

pub const PROBLEM_NAMES: [&str; 5] = ["ivp1", "ivp2", "ivp3", "ivp4", "example10"];

/// Initial predator population used when none is given.
pub const DEFAULT_KAPPA0: f64 = 5.0;

pub fn ivp1() -> IvpProblem {
    IvpProblem::new("ivp1", (0.0, 15.0), vec![-1.0], Arc::new(ForcedDecay))
        .expect("static problem definition")
        .with_description("constant coefficients: psi' - t sin(10t) + psi = 0, psi(0) = -1")
        .with_defaults(ProblemDefaults {
            sigma: 1e-5,
            increments: 5,
        })
        .with_published(PublishedResult {
            subdomains: 113,
            l1: Some(1.4499e-4),
            linf: Some(1.9268e-4),
        })
}

pub fn ivp2() -> IvpProblem {
    IvpProblem::new("ivp2", (0.0, 25.0), vec![5.0], Arc::new(RationalGrowth))
        .expect("static problem definition")
        .with_description(
            "non-constant coefficients: phi' + (1 + e^t cos(t)/1000)/(1+t^2) + 2t/(1+t^2) phi = 0, phi(0) = 5",
        )
        .with_defaults(ProblemDefaults {
            sigma: 1e-4,
            increments: 5,
        })
        .with_published(PublishedResult {
            subdomains: 50,
            l1: Some(6.8152e-4),
            linf: Some(9.8980e-4),
        })
}

pub fn ivp3() -> IvpProblem {
    IvpProblem::new("ivp3", (0.0, 20.0), vec![FRAC_PI_4], Arc::new(NonlinearSaddle))
        .expect("static problem definition")
        .with_description("non-linear: omega' / (cos^2(omega) cos^2(2t)) - 2 = 0, omega(0) = pi/4")
        .with_defaults(ProblemDefaults {
            sigma: 1e0,
            increments: 2,
        })
        .with_published(PublishedResult {
            subdomains: 32,
            l1: Some(4.6545e-3),
            linf: Some(4.9861e-3),
        })
}

/// Lotka-Volterra with `τ(0) = 3` and the given initial predator population.
pub fn ivp4_with_kappa0(kappa0: f64) -> IvpProblem {
    IvpProblem::new(
        "ivp4",
        (0.0, 30.0),
        vec![3.0, kappa0],
        Arc::new(LotkaVolterra::default()),
    )
    .expect("static problem definition")
    .with_description(format!(
        "Lotka-Volterra system, A=1.5 B=1 C=3 D=1, tau(0) = 3, kappa(0) = {kappa0}"
    ))
    .with_defaults(ProblemDefaults {
        sigma: 1e-3,
        increments: 5,
    })
    .with_published(PublishedResult {
        subdomains: 51,
        l1: None,
        linf: None,
    })
}

pub fn ivp4() -> IvpProblem {
    ivp4_with_kappa0(DEFAULT_KAPPA0)
}

pub fn example10() -> IvpProblem {
    IvpProblem::new("example10", (0.0, 1.0), vec![-1.0], Arc::new(ForcedDecay))
        .expect("static problem definition")
        .with_description("worked example: u' = t sin(10t) - u, u(0) = -1")
        .with_defaults(ProblemDefaults {
            sigma: 1e-5,
            increments: 5,
        })
}

/// `u̇ = −λu` on `[0, t_end]`.
pub fn exponential_decay(rate: f64, u0: f64, t_end: f64) -> Result<IvpProblem> {
    Ok(IvpProblem::new(
        "decay",
        (0.0, t_end),
        vec![u0],
        Arc::new(ExponentialDecay { rate, t0: 0.0, u0 }),
    )?
    .with_description("u' + rate u = 0"))
}

/// `u̇ = 0` on `[0, t_end]`.
pub fn constant(u0: f64, t_end: f64) -> Result<IvpProblem> {
    Ok(
        IvpProblem::new("constant", (0.0, t_end), vec![u0], Arc::new(Constant { u0 }))?
            .with_description("u' = 0"),
    )
}

pub fn registry() -> Vec<IvpProblem> {
    vec![ivp1(), ivp2(), ivp3(), ivp4(), example10()]
}

pub fn by_name(name: &str) -> Result<IvpProblem> {
    match name {
        "ivp1" => Ok(ivp1()),
        "ivp2" => Ok(ivp2()),
        "ivp3" => Ok(ivp3()),
        "ivp4" => Ok(ivp4()),
        "example10" => Ok(example10()),
        _ => Err(Error::UnknownProblem {
            name: name.to_string(),
            available: PROBLEM_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}
