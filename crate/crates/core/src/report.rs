//! Run reports and error metrics against a reference solution.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problems::{rk4_solve, IvpProblem, Trajectory};
use crate::refine::{refine_with, AdamSolver, AndreConfig, AttemptLog, RefinementOutcome, RunStatus, SolutionPiece, SubdomainSolver};
use crate::scnf::{make_grid, ScnfModel};

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed RK4 step count for problems without a closed-form solution.
pub const RK4_REFERENCE_STEPS: usize = 1000;

const SYSTEM_METRIC_CONVENTION: &str =
    "per point, absolute errors are averaged over equations; l1 is the mean and linf the max of that quantity over the subdomain's training points";

/// Serde for `f64` fields that may hold `±∞` or NaN (failed attempts).
pub(crate) mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// Where the error metrics come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    Analytical,
    Rk4 { steps: usize },
    None,
}

/// A callable reference solution.
#[derive(Debug, Clone)]
pub enum Reference<'a> {
    Analytical(&'a IvpProblem),
    Rk4(Trajectory),
}

impl Reference<'_> {
    pub fn for_problem(problem: &IvpProblem) -> Result<Reference<'_>> {
        if problem.has_exact() {
            Ok(Reference::Analytical(problem))
        } else {
            Ok(Reference::Rk4(rk4_solve(problem, RK4_REFERENCE_STEPS)?))
        }
    }

    pub fn kind(&self) -> ReferenceKind {
        match self {
            Reference::Analytical(_) => ReferenceKind::Analytical,
            Reference::Rk4(traj) => ReferenceKind::Rk4 {
                steps: traj.times.len() - 1,
            },
        }
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        match self {
            Reference::Analytical(p) => p.exact(t).expect("analytical reference"),
            Reference::Rk4(traj) => traj.interpolate(t),
        }
    }
}

/// Mean and max absolute deviation of `model` from `reference` over `points`.
///
/// For systems the per-equation absolute errors are averaged at each point first.
pub fn subdomain_errors(model: &ScnfModel, points: &[f64], reference: impl Fn(f64) -> Vec<f64>) -> (f64, f64) {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for &t in points {
        let approx = model.trial_value(t);
        let exact = reference(t);
        let err = point_error(&approx, &exact);
        sum += err;
        max = max.max(err);
    }
    (sum / points.len() as f64, max)
}

fn point_error(approx: &[f64], exact: &[f64]) -> f64 {
    approx
        .iter()
        .zip(exact)
        .map(|(a, e)| (e - a).abs())
        .sum::<f64>()
        / approx.len() as f64
}

/// Subdomain average of per-subdomain `(l1, linf)` pairs.
pub fn aggregate(per_subdomain: &[(f64, f64)]) -> (f64, f64) {
    assert!(!per_subdomain.is_empty(), "aggregate needs at least one subdomain");
    let h = per_subdomain.len() as f64;
    let l1 = per_subdomain.iter().map(|e| e.0).sum::<f64>() / h;
    let linf = per_subdomain.iter().map(|e| e.1).sum::<f64>() / h;
    (l1, linf)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub name: String,
    pub description: String,
    pub dimension: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub initial: Vec<f64>,
}

impl From<&IvpProblem> for ProblemInfo {
    fn from(p: &IvpProblem) -> Self {
        Self {
            name: p.name().to_string(),
            description: p.description().to_string(),
            dimension: p.dim(),
            t_start: p.t_start(),
            t_end: p.t_end(),
            initial: p.initial().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainRecord {
    /// One-based index `l`.
    pub index: usize,
    pub t_left: f64,
    pub t_right: f64,
    pub training_error: f64,
    pub verification_error: f64,
    pub hidden: usize,
    pub learning_rate: f64,
    pub attempts: usize,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
    /// Same metrics at the verification points, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1_verification: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linf_verification: Option<f64>,
    pub handoff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// Number of verified subdomains.
    pub h: usize,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
    pub mean_training_error: Option<f64>,
    pub mean_verification_error: Option<f64>,
    pub total_epochs: usize,
    pub wall_time_s: f64,
}

impl Aggregates {
    /// Recomputes everything except epochs and wall time from the records.
    pub fn from_records(records: &[SubdomainRecord], total_epochs: usize, wall_time_s: f64) -> Self {
        let errors: Option<Vec<(f64, f64)>> = records
            .iter()
            .map(|r| Some((r.l1?, r.linf?)))
            .collect();
        let (l1, linf) = match errors {
            Some(e) if !e.is_empty() => {
                let (a, b) = aggregate(&e);
                (Some(a), Some(b))
            }
            _ => (None, None),
        };
        Self {
            h: records.len(),
            l1,
            linf,
            mean_training_error: mean(records.iter().map(|r| r.training_error)),
            mean_verification_error: mean(records.iter().map(|r| r.verification_error)),
            total_epochs,
            wall_time_s,
        }
    }
}

/// Trial solution sampled at a subdomain's training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub subdomain: usize,
    pub t: f64,
    pub is_left_boundary: bool,
    pub value: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub abs_error: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub problem: ProblemInfo,
    pub config: AndreConfig,
    #[serde(flatten)]
    pub status: RunStatus,
    pub reference: ReferenceKind,
    pub metric_convention: String,
    pub boundaries: Vec<f64>,
    pub subdomains: Vec<SubdomainRecord>,
    pub aggregates: Aggregates,
    pub attempts: Vec<AttemptLog>,
    pub solution: Vec<SolutionRow>,
    /// Trained models of the verified subdomains, in order.
    pub models: Vec<ScnfModel>,
}

impl RunReport {
    pub fn is_completed(&self) -> bool {
        self.status.is_completed()
    }

    /// Evaluates the piecewise trial solution at any `t` covered by a verified
    /// subdomain. Shared boundaries resolve to the left subdomain.
    pub fn evaluate(&self, t: f64) -> Option<Vec<f64>> {
        self.models
            .iter()
            .find(|m| t >= m.t0() && t <= m.t_right())
            .map(|m| m.trial_value(t))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Also compute the error metrics at verification points.
    pub verification_metrics: bool,
}

/// Solves `problem` and builds the full report.
pub fn run(problem: &IvpProblem, config: &AndreConfig) -> Result<RunReport> {
    run_with(problem, config, &RunOptions::default(), &mut AdamSolver)
}

pub fn run_with<S: SubdomainSolver>(
    problem: &IvpProblem,
    config: &AndreConfig,
    options: &RunOptions,
    solver: &mut S,
) -> Result<RunReport> {
    let started = Instant::now();
    let outcome = refine_with(problem, config, solver)?;
    let wall = started.elapsed().as_secs_f64();
    build_report(problem, config, options, outcome, wall)
}

pub fn build_report(
    problem: &IvpProblem,
    config: &AndreConfig,
    options: &RunOptions,
    outcome: RefinementOutcome,
    wall_time_s: f64,
) -> Result<RunReport> {
    let reference = Reference::for_problem(problem)?;
    let mut subdomains = Vec::with_capacity(outcome.pieces.len());
    let mut solution = Vec::new();

    for piece in &outcome.pieces {
        let SolutionPiece { model, .. } = piece;
        let grid = make_grid(piece.t_left, piece.t_right, config.n_tp, config.n_vp)?;
        let (l1, linf) = subdomain_errors(model, &grid.training_points, |t| reference.at(t));
        let (l1_vp, linf_vp) = if options.verification_metrics {
            let (a, b) = subdomain_errors(model, &grid.verification_points, |t| reference.at(t));
            (Some(a), Some(b))
        } else {
            (None, None)
        };
        subdomains.push(SubdomainRecord {
            index: piece.index,
            t_left: piece.t_left,
            t_right: piece.t_right,
            training_error: piece.training_error,
            verification_error: piece.verification_error,
            hidden: piece.hidden,
            learning_rate: piece.learning_rate,
            attempts: piece.attempts,
            l1: Some(l1),
            linf: Some(linf),
            l1_verification: l1_vp,
            linf_verification: linf_vp,
            handoff: piece.handoff.clone(),
        });
        for (i, &t) in grid.training_points.iter().enumerate() {
            let value = model.trial_value(t);
            let exact = reference.at(t);
            let abs_error = value.iter().zip(&exact).map(|(a, e)| (e - a).abs()).collect();
            solution.push(SolutionRow {
                subdomain: piece.index,
                t,
                is_left_boundary: i == 0,
                value,
                reference: Some(exact),
                abs_error: Some(abs_error),
            });
        }
    }

    let aggregates = Aggregates::from_records(&subdomains, outcome.total_epochs, wall_time_s);
    Ok(RunReport {
        schema: SCHEMA_VERSION,
        problem: problem.into(),
        config: config.clone(),
        status: outcome.status,
        reference: reference.kind(),
        metric_convention: SYSTEM_METRIC_CONVENTION.to_string(),
        boundaries: outcome.boundaries,
        subdomains,
        aggregates,
        attempts: outcome.attempts,
        solution,
        models: outcome.pieces.into_iter().map(|p| p.model).collect(),
    })
}
