//! Single-hidden-layer sigmoid network with scalar input and output.
//!
//! The network computes `N(t) = Σ_j ρ_j σ(ν_j t + η_j) + γ`. Besides the value
//! it provides the time derivative `Ṅ(t)` and hand-derived gradients of both
//! with respect to every weight.
//!
//! All weight-indexed vectors (gradients, Adam moments) use the canonical flat
//! order: all `ν`, then all `η`, then all `ρ`, then `γ`.

use serde::{Deserialize, Serialize};

/// Logistic sigmoid, split on the sign of `z` so `exp` never overflows.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Number of weights held by a network with `hidden` neurons.
#[inline]
pub const fn weight_count(hidden: usize) -> usize {
    3 * hidden + 1
}

/// Gradient of a scalar network quantity with respect to all `3H+1` weights,
/// stored in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGradient(pub Vec<f64>);

impl WeightGradient {
    pub fn hidden_count(&self) -> usize {
        (self.0.len() - 1) / 3
    }

    pub fn d_input_weights(&self) -> &[f64] {
        let h = self.hidden_count();
        &self.0[..h]
    }

    pub fn d_input_bias(&self) -> &[f64] {
        let h = self.hidden_count();
        &self.0[h..2 * h]
    }

    pub fn d_output_weights(&self) -> &[f64] {
        let h = self.hidden_count();
        &self.0[2 * h..3 * h]
    }

    pub fn d_output_bias(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One input, `H` sigmoid hidden neurons, one linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet1H {
    input_weights: Vec<f64>,
    input_bias: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: f64,
}

impl DenseNet1H {
    /// A network with every weight set to zero.
    pub fn zeros(hidden: usize) -> Self {
        assert!(hidden > 0, "hidden layer needs at least one neuron");
        Self {
            input_weights: vec![0.0; hidden],
            input_bias: vec![0.0; hidden],
            output_weights: vec![0.0; hidden],
            output_bias: 0.0,
        }
    }

    pub fn from_parts(
        input_weights: Vec<f64>,
        input_bias: Vec<f64>,
        output_weights: Vec<f64>,
        output_bias: f64,
    ) -> Self {
        let h = input_weights.len();
        assert!(h > 0, "hidden layer needs at least one neuron");
        assert_eq!(input_bias.len(), h, "input bias length mismatch");
        assert_eq!(output_weights.len(), h, "output weight length mismatch");
        Self {
            input_weights,
            input_bias,
            output_weights,
            output_bias,
        }
    }

    /// Builds a network from a canonical flat weight vector of length `3H+1`.
    pub fn from_flat(flat: &[f64]) -> Self {
        assert!(
            flat.len() >= 4 && (flat.len() - 1).is_multiple_of(3),
            "flat weight vector must have length 3H+1"
        );
        let h = (flat.len() - 1) / 3;
        Self {
            input_weights: flat[..h].to_vec(),
            input_bias: flat[h..2 * h].to_vec(),
            output_weights: flat[2 * h..3 * h].to_vec(),
            output_bias: flat[3 * h],
        }
    }

    /// A network that outputs the constant `c` everywhere.
    pub fn constant(hidden: usize, c: f64) -> Self {
        let mut net = Self::zeros(hidden);
        net.output_bias = c;
        net
    }

    pub fn hidden_count(&self) -> usize {
        self.input_weights.len()
    }

    pub fn weight_count(&self) -> usize {
        weight_count(self.hidden_count())
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn input_bias(&self) -> &[f64] {
        &self.input_bias
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn output_bias(&self) -> f64 {
        self.output_bias
    }

    pub fn is_finite(&self) -> bool {
        self.output_bias.is_finite()
            && self
                .input_weights
                .iter()
                .chain(&self.input_bias)
                .chain(&self.output_weights)
                .all(|w| w.is_finite())
    }

    /// Copies the weights into `out` in canonical order.
    pub fn write_flat(&self, out: &mut [f64]) {
        let h = self.hidden_count();
        assert_eq!(out.len(), weight_count(h));
        out[..h].copy_from_slice(&self.input_weights);
        out[h..2 * h].copy_from_slice(&self.input_bias);
        out[2 * h..3 * h].copy_from_slice(&self.output_weights);
        out[3 * h] = self.output_bias;
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.weight_count()];
        self.write_flat(&mut out);
        out
    }

    /// Overwrites the weights from a canonical flat slice.
    pub fn read_flat(&mut self, flat: &[f64]) {
        let h = self.hidden_count();
        assert_eq!(flat.len(), weight_count(h));
        self.input_weights.copy_from_slice(&flat[..h]);
        self.input_bias.copy_from_slice(&flat[h..2 * h]);
        self.output_weights.copy_from_slice(&flat[2 * h..3 * h]);
        self.output_bias = flat[3 * h];
    }

    pub fn forward(&self, t: f64) -> f64 {
        let mut acc = self.output_bias;
        for j in 0..self.hidden_count() {
            let z = self.input_weights[j] * t + self.input_bias[j];
            acc += self.output_weights[j] * sigmoid(z);
        }
        acc
    }

    pub fn forward_dt(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.hidden_count() {
            let z = self.input_weights[j] * t + self.input_bias[j];
            let s = sigmoid(z);
            acc += self.output_weights[j] * s * (1.0 - s) * self.input_weights[j];
        }
        acc
    }

    /// Value and time derivative together; fills `sig` with the hidden activations.
    #[inline]
    pub fn eval_with_activations(&self, t: f64, sig: &mut [f64]) -> (f64, f64) {
        let mut value = self.output_bias;
        let mut dt = 0.0;
        let params = self.input_weights.iter().zip(&self.input_bias).zip(&self.output_weights);
        for (((&nu, &eta), &rho), out) in params.zip(sig.iter_mut()) {
            let s = sigmoid(nu * t + eta);
            *out = s;
            value += rho * s;
            dt += rho * s * (1.0 - s) * nu;
        }
        (value, dt)
    }

    pub fn grad_value_weights(&self, t: f64) -> WeightGradient {
        let mut out = vec![0.0; self.weight_count()];
        let mut sig = vec![0.0; self.hidden_count()];
        self.eval_with_activations(t, &mut sig);
        self.accumulate_gradient(t, &sig, 1.0, 0.0, &mut out);
        WeightGradient(out)
    }

    pub fn grad_dt_weights(&self, t: f64) -> WeightGradient {
        let mut out = vec![0.0; self.weight_count()];
        let mut sig = vec![0.0; self.hidden_count()];
        self.eval_with_activations(t, &mut sig);
        self.accumulate_gradient(t, &sig, 0.0, 1.0, &mut out);
        WeightGradient(out)
    }

    /// Adds `c_value · ∂N/∂p + c_dt · ∂Ṅ/∂p` into `out` (canonical order).
    ///
    /// `sig` must hold the hidden activations at `t`, as produced by
    /// [`eval_with_activations`](Self::eval_with_activations).
    #[inline]
    pub fn accumulate_gradient(&self, t: f64, sig: &[f64], c_value: f64, c_dt: f64, out: &mut [f64]) {
        let h = self.hidden_count();
        debug_assert_eq!(out.len(), weight_count(h));
        let (d_nu, rest) = out.split_at_mut(h);
        let (d_eta, rest) = rest.split_at_mut(h);
        let (d_rho, d_gamma) = rest.split_at_mut(h);
        for j in 0..h {
            let s = sig[j];
            let ds = s * (1.0 - s);
            let dds = ds * (1.0 - 2.0 * s);
            let nu = self.input_weights[j];
            let rho = self.output_weights[j];
            // N  = ρ σ(z) + γ,       Ṅ = ρ σ'(z) ν,   z = ν t + η
            // ∂N/∂ν = ρ σ' t         ∂Ṅ/∂ν = ρ (σ'' t ν + σ')
            // ∂N/∂η = ρ σ'           ∂Ṅ/∂η = ρ σ'' ν
            // ∂N/∂ρ = σ              ∂Ṅ/∂ρ = σ' ν
            d_nu[j] += c_value * rho * ds * t + c_dt * rho * (dds * t * nu + ds);
            d_eta[j] += c_value * rho * ds + c_dt * rho * dds * nu;
            d_rho[j] += c_value * s + c_dt * ds * nu;
        }
        d_gamma[0] += c_value;
    }
}
