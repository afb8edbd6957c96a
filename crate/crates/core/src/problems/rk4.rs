//! Classic fixed-step fourth-order Runge-Kutta integration.

use serde::{Deserialize, Serialize};

use super::IvpProblem;
use crate::error::{Error, Result};

/// Samples of an integrated trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("trajectory has at least one sample")
    }

    /// Piecewise-linear interpolation; clamps outside the sampled span.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        let idx = self.times.partition_point(|&s| s <= t).max(1);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let w = (t - t0) / (t1 - t0);
        self.values[idx - 1]
            .iter()
            .zip(&self.values[idx])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }
}

/// Integrates `problem` over its whole domain with `n_steps` equal steps.
pub fn rk4_solve(problem: &IvpProblem, n_steps: usize) -> Result<Trajectory> {
    if n_steps < 1 {
        return Err(Error::InvalidConfig("RK4 needs at least one step".into()));
    }
    let sys = problem.system();
    let o = sys.dim();
    let (t0, t1) = (problem.t_start(), problem.t_end());
    let h = (t1 - t0) / n_steps as f64;

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut u = problem.initial().to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; o], vec![0.0; o], vec![0.0; o], vec![0.0; o]);
    let mut tmp = vec![0.0; o];

    times.push(t0);
    values.push(u.clone());
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        sys.rhs(t, &u, &mut k1);
        for r in 0..o {
            tmp[r] = u[r] + 0.5 * h * k1[r];
        }
        sys.rhs(t + 0.5 * h, &tmp, &mut k2);
        for r in 0..o {
            tmp[r] = u[r] + 0.5 * h * k2[r];
        }
        sys.rhs(t + 0.5 * h, &tmp, &mut k3);
        for r in 0..o {
            tmp[r] = u[r] + h * k3[r];
        }
        sys.rhs(t + h, &tmp, &mut k4);
        for r in 0..o {
            u[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
        }
        times.push(if step + 1 == n_steps { t1 } else { t0 + (step + 1) as f64 * h });
        values.push(u.clone());
    }
    Ok(Trajectory { times, values })
}
