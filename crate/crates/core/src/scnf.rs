//! Subdomain collocation neural forms.
//!
//! On a subdomain starting at `t0` each solution component `q` is a
//! polynomial in `s = t − t0` whose coefficients are small networks:
//!
//! * [`Ansatz::HardIc`]: `ũ_q = u0_q + Σ_{k=1..m} N_{q,k}(t) s^k`, so the
//!   initial value holds for any weights.
//! * [`Ansatz::LearnedIc`]: `ũ_q = N_{q,1}(t) + Σ_{k=2..m} N_{q,k}(t) s^{k−1}`,
//!   with the initial value enforced by a penalty term in the cost.
//!
//! The cost over a point set is `1/(2(n+1)) Σ_i Σ_q G_q(t_i, ũ, ũ̇)²` (plus the
//! penalty `½ Σ_q (N_{q,1}(t0) − u0_q)²` for the learned variant).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{weight_count, DenseNet1H};
use crate::problems::IvpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ansatz {
    /// Initial value built into the trial solution.
    #[default]
    HardIc,
    /// First network learns the initial value through a cost penalty.
    LearnedIc,
}

impl Ansatz {
    /// Power of `s` multiplying network `k` (1-based).
    #[inline]
    fn exponent(self, k: usize) -> usize {
        match self {
            Ansatz::HardIc => k,
            Ansatz::LearnedIc => k - 1,
        }
    }
}

impl std::str::FromStr for Ansatz {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" | "hard_ic" => Ok(Ansatz::HardIc),
            "learned" | "learned_ic" => Ok(Ansatz::LearnedIc),
            other => Err(Error::InvalidConfig(format!(
                "unknown ansatz `{other}` (expected `hard` or `learned`)"
            ))),
        }
    }
}

impl std::fmt::Display for Ansatz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ansatz::HardIc => "hard",
            Ansatz::LearnedIc => "learned",
        })
    }
}

/// Equidistant training and verification points on one subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainGrid {
    pub t_left: f64,
    pub t_right: f64,
    pub training_points: Vec<f64>,
    pub verification_points: Vec<f64>,
}

fn equidistant(t_left: f64, t_right: f64, n: usize) -> Vec<f64> {
    let width = t_right - t_left;
    let mut pts: Vec<f64> = (0..=n)
        .map(|i| t_left + i as f64 * width / n as f64)
        .collect();
    pts[n] = t_right;
    pts
}

/// `n_tp + 1` training and `n_vp + 1` verification points, both including
/// the subdomain end points.
pub fn make_grid(t_left: f64, t_right: f64, n_tp: usize, n_vp: usize) -> Result<SubdomainGrid> {
    if !(t_left < t_right) || !t_left.is_finite() || !t_right.is_finite() {
        return Err(Error::DegenerateInterval {
            left: t_left,
            right: t_right,
        });
    }
    if n_tp < 1 || n_vp < 1 {
        return Err(Error::InvalidConfig(
            "training and verification point counts must be at least 1".into(),
        ));
    }
    Ok(SubdomainGrid {
        t_left,
        t_right,
        training_points: equidistant(t_left, t_right, n_tp),
        verification_points: equidistant(t_left, t_right, n_vp),
    })
}

/// Trial solution and derivative at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPoint {
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
    /// `t` lies outside `[t0, t_right]`.
    pub extrapolated: bool,
}

/// Everything the residual sees at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualContext {
    pub t: f64,
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
    pub residual: Vec<f64>,
    /// Row-major `o × o`, `[q * o + r] = ∂G_q/∂u_r`.
    pub dg_du: Vec<f64>,
    /// Row-major `o × o`, `[q * o + r] = ∂G_q/∂u̇_r`.
    pub dg_ddu: Vec<f64>,
}

/// The `o × m` networks of one subdomain plus its anchor and initial value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScnfModel {
    ansatz: Ansatz,
    order: usize,
    /// Network `k` (1-based) of equation `q` lives at `q * order + k - 1`.
    networks: Vec<DenseNet1H>,
    initial_value: Vec<f64>,
    t0: f64,
    t_right: f64,
}

impl ScnfModel {
    /// Zero-initialised networks on `[t0, t_right]`.
    pub fn zeros(
        ansatz: Ansatz,
        order: usize,
        hidden: usize,
        initial_value: Vec<f64>,
        t0: f64,
        t_right: f64,
    ) -> Self {
        assert!(order >= 1, "SCNF order must be at least 1");
        assert!(!initial_value.is_empty(), "need at least one equation");
        let nets = initial_value.len() * order;
        Self {
            ansatz,
            order,
            networks: vec![DenseNet1H::zeros(hidden); nets],
            initial_value,
            t0,
            t_right,
        }
    }

    pub fn from_networks(
        ansatz: Ansatz,
        order: usize,
        networks: Vec<DenseNet1H>,
        initial_value: Vec<f64>,
        t0: f64,
        t_right: f64,
    ) -> Self {
        assert!(order >= 1);
        assert_eq!(networks.len(), initial_value.len() * order, "need o × m networks");
        let h = networks[0].hidden_count();
        assert!(
            networks.iter().all(|n| n.hidden_count() == h),
            "all networks must share the hidden width"
        );
        Self {
            ansatz,
            order,
            networks,
            initial_value,
            t0,
            t_right,
        }
    }

    pub fn ansatz(&self) -> Ansatz {
        self.ansatz
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn equations(&self) -> usize {
        self.initial_value.len()
    }

    pub fn hidden_count(&self) -> usize {
        self.networks[0].hidden_count()
    }

    pub fn initial_value(&self) -> &[f64] {
        &self.initial_value
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_right(&self) -> f64 {
        self.t_right
    }

    /// Network `k` (1-based) for equation `q`.
    pub fn network(&self, q: usize, k: usize) -> &DenseNet1H {
        &self.networks[q * self.order + k - 1]
    }

    pub fn network_mut(&mut self, q: usize, k: usize) -> &mut DenseNet1H {
        &mut self.networks[q * self.order + k - 1]
    }

    pub fn networks(&self) -> &[DenseNet1H] {
        &self.networks
    }

    /// Total number of trainable weights, `o · m · (3H+1)`.
    pub fn weight_count(&self) -> usize {
        self.networks.len() * weight_count(self.hidden_count())
    }

    pub fn weights_flat(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.weight_count()];
        self.write_weights(&mut out);
        out
    }

    pub fn write_weights(&self, out: &mut [f64]) {
        let w = weight_count(self.hidden_count());
        for (net, chunk) in self.networks.iter().zip(out.chunks_exact_mut(w)) {
            net.write_flat(chunk);
        }
    }

    pub fn set_weights(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.weight_count());
        let w = weight_count(self.hidden_count());
        for (net, chunk) in self.networks.iter_mut().zip(flat.chunks_exact(w)) {
            net.read_flat(chunk);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.networks.iter().all(DenseNet1H::is_finite)
    }

    pub fn is_extrapolation(&self, t: f64) -> bool {
        t < self.t0 || t > self.t_right
    }

    /// Fills `pows[e] = s^e` for `e = 0..=order` by repeated multiplication.
    #[inline]
    fn powers(&self, s: f64, pows: &mut [f64]) {
        pows[0] = 1.0;
        for e in 1..=self.order {
            pows[e] = pows[e - 1] * s;
        }
    }

    pub fn trial_value(&self, t: f64) -> Vec<f64> {
        self.evaluate(t).value
    }

    pub fn trial_dt(&self, t: f64) -> Vec<f64> {
        self.evaluate(t).derivative
    }

    pub fn evaluate(&self, t: f64) -> TrialPoint {
        let o = self.equations();
        let mut value = vec![0.0; o];
        let mut derivative = vec![0.0; o];
        let mut sig = vec![0.0; self.hidden_count()];
        let mut pows = vec![0.0; self.order + 1];
        self.powers(t - self.t0, &mut pows);
        for q in 0..o {
            let (mut v, mut d) = match self.ansatz {
                Ansatz::HardIc => (self.initial_value[q], 0.0),
                Ansatz::LearnedIc => (0.0, 0.0),
            };
            for k in 1..=self.order {
                let (n, n_dt) = self.network(q, k).eval_with_activations(t, &mut sig);
                let e = self.ansatz.exponent(k);
                v += n * pows[e];
                d += n_dt * pows[e];
                if e > 0 {
                    d += n * e as f64 * pows[e - 1];
                }
            }
            value[q] = v;
            derivative[q] = d;
        }
        TrialPoint {
            value,
            derivative,
            extrapolated: self.is_extrapolation(t),
        }
    }

    pub fn residual_context(&self, problem: &IvpProblem, t: f64) -> ResidualContext {
        let o = self.equations();
        let TrialPoint {
            value, derivative, ..
        } = self.evaluate(t);
        let sys = problem.system();
        let mut residual = vec![0.0; o];
        let mut dg_du = vec![0.0; o * o];
        let mut dg_ddu = vec![0.0; o * o];
        sys.residual(t, &value, &derivative, &mut residual);
        sys.partials(t, &value, &derivative, &mut dg_du, &mut dg_ddu);
        ResidualContext {
            t,
            value,
            derivative,
            residual,
            dg_du,
            dg_ddu,
        }
    }

    /// Collocation cost over `points`. A non-finite result signals divergence.
    pub fn cost(&self, problem: &IvpProblem, points: &[f64]) -> Result<f64> {
        self.check_problem(problem)?;
        let mut ws = Workspace::new(self);
        Ok(ws.evaluate(self, problem, points, None))
    }

    /// Gradient of [`cost`](Self::cost) over all weights, in flat model order.
    pub fn cost_gradient(&self, problem: &IvpProblem, points: &[f64]) -> Result<Vec<f64>> {
        self.check_problem(problem)?;
        let mut ws = Workspace::new(self);
        let mut grad = vec![0.0; self.weight_count()];
        ws.evaluate(self, problem, points, Some(&mut grad));
        Ok(grad)
    }

    pub(crate) fn check_problem(&self, problem: &IvpProblem) -> Result<()> {
        if problem.dim() != self.equations() {
            return Err(Error::DimensionMismatch {
                model: self.equations(),
                problem: problem.dim(),
            });
        }
        Ok(())
    }
}

/// Scratch buffers for repeated cost/gradient evaluation without allocation.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    sig: Vec<f64>,
    n_val: Vec<f64>,
    n_dt: Vec<f64>,
    pows: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    g: Vec<f64>,
    dg_du: Vec<f64>,
    dg_ddu: Vec<f64>,
    adj_u: Vec<f64>,
    adj_du: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(model: &ScnfModel) -> Self {
        let o = model.equations();
        let nets = model.networks.len();
        Self {
            sig: vec![0.0; nets * model.hidden_count()],
            n_val: vec![0.0; nets],
            n_dt: vec![0.0; nets],
            pows: vec![0.0; model.order + 1],
            u: vec![0.0; o],
            du: vec![0.0; o],
            g: vec![0.0; o],
            dg_du: vec![0.0; o * o],
            dg_ddu: vec![0.0; o * o],
            adj_u: vec![0.0; o],
            adj_du: vec![0.0; o],
        }
    }

    /// Returns the cost over `points`; when `grad` is given it is overwritten
    /// with the full-batch gradient.
    pub(crate) fn evaluate(
        &mut self,
        model: &ScnfModel,
        problem: &IvpProblem,
        points: &[f64],
        mut grad: Option<&mut [f64]>,
    ) -> f64 {
        assert!(!points.is_empty(), "cost needs at least one point");
        let sys = problem.system();
        let o = model.equations();
        let m = model.order;
        let h = model.hidden_count();
        let wc = weight_count(h);
        let inv_n = 1.0 / points.len() as f64;

        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }

        let mut sum_sq = 0.0;
        for &t in points {
            model.powers(t - model.t0, &mut self.pows);
            for q in 0..o {
                let (mut v, mut d) = match model.ansatz {
                    Ansatz::HardIc => (model.initial_value[q], 0.0),
                    Ansatz::LearnedIc => (0.0, 0.0),
                };
                for k in 1..=m {
                    let idx = q * m + k - 1;
                    let (n, n_dt) = model.networks[idx]
                        .eval_with_activations(t, &mut self.sig[idx * h..(idx + 1) * h]);
                    self.n_val[idx] = n;
                    self.n_dt[idx] = n_dt;
                    let e = model.ansatz.exponent(k);
                    v += n * self.pows[e];
                    d += n_dt * self.pows[e];
                    if e > 0 {
                        d += n * e as f64 * self.pows[e - 1];
                    }
                }
                self.u[q] = v;
                self.du[q] = d;
            }
            sys.residual(t, &self.u, &self.du, &mut self.g);
            sum_sq += self.g.iter().map(|x| x * x).sum::<f64>();

            let Some(grad) = grad.as_deref_mut() else {
                continue;
            };
            sys.partials(t, &self.u, &self.du, &mut self.dg_du, &mut self.dg_ddu);
            // adj_u[r] = Σ_q G_q ∂G_q/∂u_r, adj_du[r] = Σ_q G_q ∂G_q/∂u̇_r
            for r in 0..o {
                let mut a = 0.0;
                let mut b = 0.0;
                for q in 0..o {
                    a += self.g[q] * self.dg_du[q * o + r];
                    b += self.g[q] * self.dg_ddu[q * o + r];
                }
                self.adj_u[r] = a * inv_n;
                self.adj_du[r] = b * inv_n;
            }
            for r in 0..o {
                let (a, b) = (self.adj_u[r], self.adj_du[r]);
                for k in 1..=m {
                    let idx = r * m + k - 1;
                    let e = model.ansatz.exponent(k);
                    let pe = self.pows[e];
                    let mut c_value = a * pe;
                    if e > 0 {
                        c_value += b * e as f64 * self.pows[e - 1];
                    }
                    let c_dt = b * pe;
                    model.networks[idx].accumulate_gradient(
                        t,
                        &self.sig[idx * h..(idx + 1) * h],
                        c_value,
                        c_dt,
                        &mut grad[idx * wc..(idx + 1) * wc],
                    );
                }
            }
        }
        let mut cost = 0.5 * inv_n * sum_sq;

        if model.ansatz == Ansatz::LearnedIc {
            let t0 = model.t0;
            for q in 0..o {
                let idx = q * m;
                let net = &model.networks[idx];
                let sig = &mut self.sig[idx * h..(idx + 1) * h];
                let (n0, _) = net.eval_with_activations(t0, sig);
                let diff = n0 - model.initial_value[q];
                cost += 0.5 * diff * diff;
                if let Some(grad) = grad.as_deref_mut() {
                    net.accumulate_gradient(t0, sig, diff, 0.0, &mut grad[idx * wc..(idx + 1) * wc]);
                }
            }
        }
        cost
    }
}
