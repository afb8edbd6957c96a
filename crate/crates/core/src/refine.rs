//! Adaptive neural domain refinement.
//!
//! The time domain starts as a single subdomain. Each attempt trains a fresh
//! SCNF on the current subdomain `l` and evaluates the verification error
//! `E_VP`. Then:
//!
//! * `E_VP ≤ σ`: the subdomain is accepted, its end value becomes the next
//!   initial value and the adjustable parameters are reset.
//! * failure on the rightmost subdomain: split it, `t_{l+1} = t_l + δ(t_{l+1} − t_l)`.
//! * failure elsewhere: if the subdomain is already small or `E_VP` did not
//!   improve over the previous attempt, escalate the learning rate (then the
//!   hidden width); otherwise shrink the right boundary by the same rule.
//!
//! The global right boundary never moves.

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{train, TrainConfig};
use crate::problems::IvpProblem;
use crate::scnf::{make_grid, Ansatz, ScnfModel, SubdomainGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndreConfig {
    /// Verification error bound.
    #[serde(with = "crate::report::nonfinite")]
    pub sigma: f64,
    /// Resize factor for splits and reductions.
    pub delta: f64,
    pub min_subdomain_size: f64,
    pub n_tp: usize,
    pub n_vp: usize,
    pub order: usize,
    pub ansatz: Ansatz,
    /// Base training settings; the learning rate is taken from the ladder.
    pub train: TrainConfig,
    pub learning_rate_ladder: Vec<f64>,
    pub neuron_increment: usize,
    pub base_hidden: usize,
    pub neuron_cap: usize,
    /// Start retries on the same subdomain from the previous attempt's weights.
    #[serde(default)]
    pub warm_start: bool,
}

impl Default for AndreConfig {
    fn default() -> Self {
        Self {
            sigma: 1e-5,
            delta: 0.5,
            min_subdomain_size: 0.1,
            n_tp: 9,
            n_vp: 11,
            order: 5,
            ansatz: Ansatz::HardIc,
            train: TrainConfig::default(),
            learning_rate_ladder: vec![1e-3, 6e-3, 3.6e-2],
            neuron_increment: 2,
            base_hidden: 5,
            neuron_cap: 51,
            warm_start: false,
        }
    }
}

impl AndreConfig {
    /// Defaults with the problem's own σ and increment count.
    pub fn for_problem(problem: &IvpProblem) -> Self {
        let d = problem.defaults();
        let mut cfg = Self {
            sigma: d.sigma,
            ..Self::default()
        };
        cfg.train.increments = d.increments;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.min_subdomain_size >= 0.0) {
            return bad("min_subdomain_size must be non-negative");
        }
        if self.n_tp < 1 || self.n_vp < 1 {
            return bad("n_tp and n_vp must be at least 1");
        }
        if self.order < 1 {
            return bad("SCNF order must be at least 1");
        }
        if self.train.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.train.increments < 1 {
            return bad("increments must be at least 1");
        }
        if self.learning_rate_ladder.is_empty()
            || self.learning_rate_ladder.iter().any(|a| !(*a > 0.0))
        {
            return bad("learning-rate ladder must be non-empty and positive");
        }
        if self.learning_rate_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return bad("learning-rate ladder must be strictly increasing");
        }
        if self.base_hidden < 1 || self.base_hidden > self.neuron_cap {
            return bad("base hidden count must lie in [1, neuron_cap]");
        }
        if self.neuron_increment < 1 {
            return bad("neuron increment must be at least 1");
        }
        Ok(())
    }
}

/// Raised when parameter adjustment would push the hidden width past the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronCapExceeded {
    pub requested: usize,
    pub cap: usize,
}

/// Boundaries plus the adjustable parameters of the active subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementState {
    /// `t_1 < t_2 < … < t_{h+1}`.
    boundaries: Vec<f64>,
    /// Zero-based index of the active subdomain.
    current: usize,
    rung: usize,
    hidden: usize,
    /// `E_VP` of the previous attempt on the active subdomain.
    previous_vp: Option<f64>,
}

impl RefinementState {
    pub fn new(t_start: f64, t_end: f64, base_hidden: usize) -> Self {
        Self::from_boundaries(vec![t_start, t_end], 0, base_hidden)
    }

    pub fn from_boundaries(boundaries: Vec<f64>, current: usize, base_hidden: usize) -> Self {
        assert!(boundaries.len() >= 2);
        assert!(boundaries.windows(2).all(|w| w[0] < w[1]), "boundaries must increase");
        assert!(current + 1 < boundaries.len());
        Self {
            boundaries,
            current,
            rung: 0,
            hidden: base_hidden,
            previous_vp: None,
        }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Total subdomain count `h`.
    pub fn subdomain_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// One-based index `l` of the active subdomain.
    pub fn current_index(&self) -> usize {
        self.current + 1
    }

    pub fn current_bounds(&self) -> (f64, f64) {
        (self.boundaries[self.current], self.boundaries[self.current + 1])
    }

    pub fn current_width(&self) -> f64 {
        let (a, b) = self.current_bounds();
        b - a
    }

    pub fn is_rightmost(&self) -> bool {
        self.current + 2 == self.boundaries.len()
    }

    pub fn rung(&self) -> usize {
        self.rung
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn previous_vp(&self) -> Option<f64> {
        self.previous_vp
    }

    pub fn set_previous_vp(&mut self, e_vp: f64) {
        self.previous_vp = Some(e_vp);
    }

    /// Splits the rightmost subdomain at `t_l + δ(t_end − t_l)`, adding one subdomain.
    pub fn split_rightmost(&mut self, delta: f64) {
        assert!(self.is_rightmost(), "split only applies to the rightmost subdomain");
        let (left, right) = self.current_bounds();
        let cut = left + delta * (right - left);
        self.boundaries.insert(self.current + 1, cut);
    }

    /// Moves the active subdomain's right boundary to `t_l + δ(t_{l+1} − t_l)`;
    /// the next subdomain absorbs the released interval.
    pub fn reduce_subdomain(&mut self, delta: f64) {
        assert!(!self.is_rightmost(), "reduce requires an already split subdomain");
        let (left, right) = self.current_bounds();
        self.boundaries[self.current + 1] = left + delta * (right - left);
    }

    /// True when the active subdomain is at most `min_size` wide, or the
    /// previous attempt on it was at least as good as `current_vp`.
    pub fn complex_conditions(&self, current_vp: f64, min_size: f64) -> bool {
        let too_small = self.current_width() <= min_size;
        let no_improvement = self.previous_vp.is_some_and(|prev| prev <= current_vp);
        too_small || no_improvement
    }

    /// Next learning-rate rung, or two more neurons with the rate reset once
    /// the ladder is exhausted.
    pub fn adjust_parameters(&mut self, config: &AndreConfig) -> std::result::Result<(), NeuronCapExceeded> {
        if self.rung + 1 < config.learning_rate_ladder.len() {
            self.rung += 1;
            return Ok(());
        }
        let requested = self.hidden + config.neuron_increment;
        if requested > config.neuron_cap {
            return Err(NeuronCapExceeded {
                requested,
                cap: config.neuron_cap,
            });
        }
        self.hidden = requested;
        self.rung = 0;
        Ok(())
    }

    /// Moves to the next subdomain with parameters and error history reset.
    pub fn advance(&mut self, base_hidden: usize) {
        assert!(!self.is_rightmost(), "no subdomain left to advance to");
        self.current += 1;
        self.rung = 0;
        self.hidden = base_hidden;
        self.previous_vp = None;
    }
}

/// Verification error; non-finite values count as `+∞`.
pub fn verify(model: &ScnfModel, problem: &IvpProblem, grid: &SubdomainGrid) -> f64 {
    match model.cost(problem, &grid.verification_points) {
        Ok(e) if e.is_finite() => e,
        _ => f64::INFINITY,
    }
}

/// Trial solution at the subdomain's right end; the next initial value.
pub fn handoff(model: &ScnfModel, t_boundary: f64) -> Vec<f64> {
    model.trial_value(t_boundary)
}

/// Input to a single training attempt on one subdomain.
#[derive(Debug, Clone)]
pub struct AttemptRequest<'a> {
    pub grid: &'a SubdomainGrid,
    pub initial_value: &'a [f64],
    pub hidden: usize,
    pub learning_rate: f64,
    pub warm_start: Option<&'a ScnfModel>,
}

#[derive(Debug, Clone)]
pub struct AttemptResult {
    pub model: ScnfModel,
    pub training_error: f64,
    pub verification_error: f64,
    pub epochs: usize,
    pub diverged: bool,
}

/// Trains and verifies one subdomain.
pub trait SubdomainSolver {
    fn attempt(&mut self, problem: &IvpProblem, config: &AndreConfig, request: AttemptRequest<'_>) -> AttemptResult;
}

/// Full-batch Adam training followed by verification.
#[derive(Debug, Default, Clone, Copy)]
pub struct AdamSolver;

impl SubdomainSolver for AdamSolver {
    fn attempt(&mut self, problem: &IvpProblem, config: &AndreConfig, request: AttemptRequest<'_>) -> AttemptResult {
        let grid = request.grid;
        let model = match request.warm_start {
            Some(prev) if prev.hidden_count() == request.hidden => ScnfModel::from_networks(
                config.ansatz,
                config.order,
                prev.networks().to_vec(),
                request.initial_value.to_vec(),
                grid.t_left,
                grid.t_right,
            ),
            _ => ScnfModel::zeros(
                config.ansatz,
                config.order,
                request.hidden,
                request.initial_value.to_vec(),
                grid.t_left,
                grid.t_right,
            ),
        };
        let train_cfg = TrainConfig {
            learning_rate: request.learning_rate,
            ..config.train.clone()
        };
        match train(model.clone(), problem, grid, &train_cfg) {
            Ok(out) => {
                let verification_error = verify(&out.model, problem, grid);
                AttemptResult {
                    model: out.model,
                    training_error: out.training_error,
                    verification_error,
                    epochs: out.epochs_run,
                    diverged: false,
                }
            }
            Err(Error::Diverged { epoch }) => {
                debug!("training diverged at epoch {epoch} on [{}, {}]", grid.t_left, grid.t_right);
                AttemptResult {
                    model,
                    training_error: f64::INFINITY,
                    verification_error: f64::INFINITY,
                    epochs: epoch,
                    diverged: true,
                }
            }
            Err(e) => panic!("training failed on a validated configuration: {e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Accept,
    Split,
    Reduce,
    Adjust,
    Abort,
}

/// One training attempt and the decision it triggered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptLog {
    pub subdomain: usize,
    pub t_left: f64,
    pub t_right: f64,
    pub hidden: usize,
    pub learning_rate: f64,
    #[serde(with = "crate::report::nonfinite")]
    pub training_error: f64,
    #[serde(with = "crate::report::nonfinite")]
    pub verification_error: f64,
    pub diverged: bool,
    pub epochs: usize,
    pub action: Action,
}

/// A verified subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPiece {
    /// One-based subdomain index.
    pub index: usize,
    pub t_left: f64,
    pub t_right: f64,
    pub model: ScnfModel,
    pub handoff: Vec<f64>,
    pub training_error: f64,
    pub verification_error: f64,
    pub hidden: usize,
    pub learning_rate: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted { reason: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

#[derive(Debug, Clone)]
pub struct RefinementOutcome {
    pub status: RunStatus,
    pub pieces: Vec<SolutionPiece>,
    /// Final boundary list; on abort it still contains unverified subdomains.
    pub boundaries: Vec<f64>,
    pub attempts: Vec<AttemptLog>,
    pub total_epochs: usize,
}

/// Runs the refinement with the default Adam-trained solver.
pub fn refine(problem: &IvpProblem, config: &AndreConfig) -> Result<RefinementOutcome> {
    refine_with(problem, config, &mut AdamSolver)
}

pub fn refine_with<S: SubdomainSolver>(
    problem: &IvpProblem,
    config: &AndreConfig,
    solver: &mut S,
) -> Result<RefinementOutcome> {
    config.validate()?;
    let mut state = RefinementState::new(problem.t_start(), problem.t_end(), config.base_hidden);
    let mut initial = problem.initial().to_vec();
    let mut pieces = Vec::new();
    let mut attempts = Vec::new();
    let mut total_epochs = 0usize;
    let mut attempts_here = 0usize;
    let mut last_model: Option<ScnfModel> = None;

    loop {
        let (t_left, t_right) = state.current_bounds();
        let grid = make_grid(t_left, t_right, config.n_tp, config.n_vp)?;
        let learning_rate = config.learning_rate_ladder[state.rung()];
        let warm = if config.warm_start { last_model.as_ref() } else { None };
        let result = solver.attempt(
            problem,
            config,
            AttemptRequest {
                grid: &grid,
                initial_value: &initial,
                hidden: state.hidden(),
                learning_rate,
                warm_start: warm,
            },
        );
        attempts_here += 1;
        total_epochs += result.epochs;
        let e_vp = result.verification_error;

        let mut log = AttemptLog {
            subdomain: state.current_index(),
            t_left,
            t_right,
            hidden: state.hidden(),
            learning_rate,
            training_error: result.training_error,
            verification_error: e_vp,
            diverged: result.diverged,
            epochs: result.epochs,
            action: Action::Accept,
        };
        debug!(
            "l={} [{t_left}, {t_right}] H={} alpha={learning_rate} E_TP={:e} E_VP={:e}",
            log.subdomain, log.hidden, result.training_error, e_vp
        );

        if e_vp <= config.sigma {
            let handoff = handoff(&result.model, t_right);
            pieces.push(SolutionPiece {
                index: state.current_index(),
                t_left,
                t_right,
                model: result.model,
                handoff: handoff.clone(),
                training_error: result.training_error,
                verification_error: e_vp,
                hidden: state.hidden(),
                learning_rate,
                attempts: attempts_here,
            });
            attempts.push(log);
            info!("accepted subdomain {} = [{t_left}, {t_right}]", state.current_index());
            if state.is_rightmost() {
                return Ok(RefinementOutcome {
                    status: RunStatus::Completed,
                    pieces,
                    boundaries: state.boundaries().to_vec(),
                    attempts,
                    total_epochs,
                });
            }
            initial = handoff;
            state.advance(config.base_hidden);
            attempts_here = 0;
            last_model = None;
            continue;
        }

        let adjust = if state.is_rightmost() {
            // tails at the minimum width are never split further
            state.current_width() <= config.min_subdomain_size
        } else {
            state.complex_conditions(e_vp, config.min_subdomain_size)
        };

        if adjust {
            if let Err(cap) = state.adjust_parameters(config) {
                log.action = Action::Abort;
                attempts.push(log);
                let reason = format!(
                    "hidden neuron count {} would exceed cap {} on subdomain {} = [{t_left}, {t_right}]",
                    cap.requested,
                    cap.cap,
                    state.current_index()
                );
                info!("aborting: {reason}");
                return Ok(RefinementOutcome {
                    status: RunStatus::Aborted { reason },
                    pieces,
                    boundaries: state.boundaries().to_vec(),
                    attempts,
                    total_epochs,
                });
            }
            log.action = Action::Adjust;
        } else if state.is_rightmost() {
            state.split_rightmost(config.delta);
            log.action = Action::Split;
        } else {
            state.reduce_subdomain(config.delta);
            log.action = Action::Reduce;
        }
        attempts.push(log);
        state.set_previous_vp(e_vp);
        last_model = Some(result.model);
    }
}
