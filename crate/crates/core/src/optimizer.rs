//! Full-batch Adam training of a subdomain model with incremental learning.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::IvpProblem;
use crate::scnf::{ScnfModel, SubdomainGrid, Workspace};

/// Adam moments aligned with the flat model weight order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(n_weights: usize, learning_rate: f64) -> Self {
        Self {
            step: 0,
            m: vec![0.0; n_weights],
            v: vec![0.0; n_weights],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn from_config(n_weights: usize, config: &TrainConfig) -> Self {
        Self {
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            ..Self::new(n_weights, config.learning_rate)
        }
    }

    /// One bias-corrected Adam update in place. A non-finite gradient leaves
    /// weights and moments untouched and returns an error.
    pub fn step(&mut self, weights: &mut [f64], gradient: &[f64]) -> Result<()> {
        assert_eq!(weights.len(), gradient.len(), "weight/gradient length mismatch");
        assert_eq!(weights.len(), self.m.len(), "moment length mismatch");
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                epoch: self.step as usize,
            });
        }
        self.step += 1;
        let t = self.step.min(i32::MAX as u64) as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((w, &g), (m, v)) in weights
            .iter_mut()
            .zip(gradient)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub increments: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop once the cost on the full training set drops below this value.
    #[serde(default)]
    pub early_stop_below: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100_000,
            increments: 5,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            early_stop_below: None,
        }
    }
}

/// Prefix lengths of the training point set for each increment.
///
/// `(10, 5)` gives `[2, 4, 6, 8, 10]`; prefix `i` is `i·n/k` rounded half up.
/// More increments than points are clamped to one point per increment.
pub fn incremental_schedule(n_points: usize, increments: usize) -> Result<Vec<usize>> {
    if increments == 0 {
        return Err(Error::InvalidConfig("increments must be at least 1".into()));
    }
    if n_points == 0 {
        return Err(Error::InvalidConfig("need at least one training point".into()));
    }
    let k = if increments > n_points {
        warn!("{increments} increments requested for {n_points} training points; clamping to {n_points}");
        n_points
    } else {
        increments
    };
    Ok((1..=k).map(|i| (2 * i * n_points + k) / (2 * k)).collect())
}

/// Summary of one increment of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementLog {
    pub points: usize,
    pub epochs: usize,
    pub cost_start: f64,
    pub cost_end: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ScnfModel,
    /// Cost on all training points after the last update.
    pub training_error: f64,
    pub epochs_run: usize,
    pub history: Vec<IncrementLog>,
}

/// Trains `model` on the grid's training points.
///
/// The epoch budget is split evenly across increments (remainder to the last
/// one); weights and Adam moments carry over between increments. Each epoch
/// is one full-batch gradient over the active prefix and one Adam step.
pub fn train(
    mut model: ScnfModel,
    problem: &IvpProblem,
    grid: &SubdomainGrid,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    model.check_problem(problem)?;
    let points = &grid.training_points;
    let schedule = incremental_schedule(points.len(), config.increments)?;
    let k = schedule.len();
    let per_increment = config.epochs / k;
    let remainder = config.epochs % k;

    let mut ws = Workspace::new(&model);
    let mut weights = model.weights_flat();
    let mut grad = vec![0.0; weights.len()];
    let mut adam = AdamState::from_config(weights.len(), config);
    let mut history = Vec::with_capacity(k);
    let mut epoch = 0usize;

    'schedule: for (i, &prefix) in schedule.iter().enumerate() {
        let active = &points[..prefix];
        let budget = per_increment + if i + 1 == k { remainder } else { 0 };
        let full_set = prefix == points.len();
        let mut log = IncrementLog {
            points: prefix,
            epochs: 0,
            cost_start: f64::NAN,
            cost_end: f64::NAN,
        };
        for _ in 0..budget {
            let cost = ws.evaluate(&model, problem, active, Some(&mut grad));
            if !cost.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            if log.epochs == 0 {
                log.cost_start = cost;
            }
            log.cost_end = cost;
            if full_set && config.early_stop_below.is_some_and(|thr| cost < thr) {
                history.push(log);
                break 'schedule;
            }
            adam.step(&mut weights, &grad)
                .map_err(|_| Error::Diverged { epoch })?;
            model.set_weights(&weights);
            log.epochs += 1;
            epoch += 1;
        }
        history.push(log);
    }

    let training_error = ws.evaluate(&model, problem, points, None);
    if !training_error.is_finite() {
        return Err(Error::Diverged { epoch });
    }
    Ok(TrainOutcome {
        model,
        training_error,
        epochs_run: epoch,
        history,
    })
}
