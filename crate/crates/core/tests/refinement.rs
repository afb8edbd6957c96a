use andre::optimizer::{train, TrainConfig};
use andre::problems::{self, IvpProblem};
use andre::refine::{Action, AttemptRequest, AttemptResult};
use andre::report::{run, run_with, RunOptions};
use andre::sweep::{sweep, SweepOptions, SweepParam};
use andre::{make_grid, refine, Ansatz, AndreConfig, ScnfModel, SubdomainSolver};

fn quick_config(sigma: f64, epochs: usize) -> AndreConfig {
    let mut cfg = AndreConfig {
        sigma,
        ..AndreConfig::default()
    };
    cfg.train.epochs = epochs;
    cfg
}

#[test]
fn constant_problem_trains_to_zero_error() {
    let p = problems::constant(1.0, 1.0).unwrap();
    let grid = make_grid(0.0, 1.0, 9, 11).unwrap();
    let model = ScnfModel::zeros(Ansatz::HardIc, 1, 5, vec![1.0], 0.0, 1.0);
    let cfg = TrainConfig {
        epochs: 1000,
        ..TrainConfig::default()
    };
    let out = train(model, &p, &grid, &cfg).unwrap();
    assert!(out.training_error < 1e-8, "{:e}", out.training_error);
}

#[test]
fn example10_half_domain_trains_below_1e_5() {
    let p = problems::example10();
    let grid = make_grid(0.0, 0.5, 9, 11).unwrap();
    let model = ScnfModel::zeros(Ansatz::HardIc, 5, 5, vec![-1.0], 0.0, 0.5);
    let out = train(model, &p, &grid, &TrainConfig::default()).unwrap();
    assert!(out.training_error < 1e-5, "{:e}", out.training_error);
    let first = out.history.first().unwrap();
    let last = out.history.last().unwrap();
    assert!(last.cost_end < first.cost_start);
}

#[test]
fn training_is_bit_deterministic() {
    let p = problems::ivp3();
    let grid = make_grid(0.0, 0.6, 9, 11).unwrap();
    let cfg = TrainConfig {
        epochs: 3000,
        increments: 2,
        ..TrainConfig::default()
    };
    let m = ScnfModel::zeros(Ansatz::HardIc, 5, 5, p.initial().to_vec(), 0.0, 0.6);
    let a = train(m.clone(), &p, &grid, &cfg).unwrap();
    let b = train(m, &p, &grid, &cfg).unwrap();
    assert_eq!(a.model.weights_flat(), b.model.weights_flat());
    assert_eq!(a.training_error.to_bits(), b.training_error.to_bits());
}

#[test]
fn trivial_problem_needs_one_subdomain() {
    let p = problems::constant(1.0, 1.0).unwrap();
    let report = run(&p, &quick_config(1e-4, 1000)).unwrap();
    assert!(report.is_completed());
    assert_eq!(report.boundaries, vec![0.0, 1.0]);
    for t in [0.0, 0.3, 0.77, 1.0] {
        assert!((report.evaluate(t).unwrap()[0] - 1.0).abs() < 1e-4);
    }
}

fn check_invariants(p: &IvpProblem, cfg: &AndreConfig) {
    let out = refine(p, cfg).unwrap();
    assert!(out.status.is_completed());
    let b = &out.boundaries;
    assert_eq!(b[0], p.t_start());
    assert_eq!(*b.last().unwrap(), p.t_end());
    assert!(b.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(out.pieces.len(), b.len() - 1);

    for (l, piece) in out.pieces.iter().enumerate() {
        assert_eq!((piece.t_left, piece.t_right), (b[l], b[l + 1]));
        assert!(piece.verification_error <= cfg.sigma);
        let expected_iv = if l == 0 { p.initial().to_vec() } else { out.pieces[l - 1].handoff.clone() };
        assert_eq!(piece.model.initial_value(), expected_iv.as_slice());
        assert_eq!(piece.model.trial_value(piece.t_left), expected_iv);
    }

    // every subdomain is entered with the base parameters
    let mut seen = 0;
    for a in &out.attempts {
        if a.subdomain > seen {
            seen = a.subdomain;
            assert_eq!(a.hidden, cfg.base_hidden);
            assert_eq!(a.learning_rate, cfg.learning_rate_ladder[0]);
        }
    }
    assert_eq!(out.attempts.last().unwrap().action, Action::Accept);
}

#[test]
fn refinement_invariants_on_real_runs() {
    check_invariants(&problems::exponential_decay(3.0, 2.0, 3.0).unwrap(), &quick_config(1e-4, 4000));
    check_invariants(&problems::ivp1().with_t_end(1.5).unwrap(), &quick_config(1e-3, 4000));
    let mut lv = quick_config(1e-2, 4000);
    lv.train.increments = 2;
    check_invariants(&problems::ivp4().with_t_end(1.0).unwrap(), &lv);
}

/// Fails with a non-finite error until the subdomain is narrow enough.
struct Diverging;

impl SubdomainSolver for Diverging {
    fn attempt(&mut self, _p: &IvpProblem, cfg: &AndreConfig, req: AttemptRequest<'_>) -> AttemptResult {
        let width = req.grid.t_right - req.grid.t_left;
        let e = if width > 0.6 { f64::INFINITY } else { 0.0 };
        AttemptResult {
            model: ScnfModel::zeros(cfg.ansatz, cfg.order, req.hidden, req.initial_value.to_vec(), req.grid.t_left, req.grid.t_right),
            training_error: e,
            verification_error: e,
            epochs: 1,
            diverged: e.is_infinite(),
        }
    }
}

#[test]
fn divergence_counts_as_failed_verification() {
    let p = problems::constant(1.0, 1.0).unwrap();
    let report = run_with(&p, &AndreConfig::default(), &RunOptions::default(), &mut Diverging).unwrap();
    assert!(report.is_completed());
    assert!(report.subdomains.iter().all(|s| s.t_right - s.t_left <= 0.6));
    assert!(report.attempts.iter().any(|a| a.diverged && a.action == Action::Split));
    let json = serde_json::to_string(&report).unwrap();
    let back: andre::RunReport = serde_json::from_str(&json).unwrap();
    assert!(back.attempts[0].verification_error.is_infinite());
}

#[test]
fn neuron_cap_aborts_with_partial_report() {
    let p = problems::ivp1().with_t_end(2.0).unwrap();
    let mut cfg = quick_config(1e-12, 50);
    cfg.neuron_cap = 7;
    cfg.min_subdomain_size = 1.0;
    let report = run(&p, &cfg).unwrap();
    assert!(!report.is_completed());
    let last = report.attempts.last().unwrap();
    assert_eq!(last.action, Action::Abort);
    assert_eq!(last.hidden, 7);
}

#[test]
fn single_value_sweep_equals_plain_run() {
    let p = problems::exponential_decay(2.0, 1.0, 2.0).unwrap();
    let cfg = quick_config(1e-3, 2000);
    let table = sweep(&p, &cfg, SweepParam::Sigma, &[1e-3], &SweepOptions::default()).unwrap();
    let report = run(&p, &cfg).unwrap();
    let row = &table.rows[0];
    assert_eq!(row.h, report.aggregates.h);
    assert_eq!(row.l1, report.aggregates.l1);
    assert_eq!(row.mean_verification_error, report.aggregates.mean_verification_error);
    assert_eq!(row.total_epochs, report.aggregates.total_epochs);
}

#[test]
fn sweep_rows_do_not_depend_on_execution_order() {
    let p = problems::exponential_decay(2.0, 1.0, 2.0).unwrap();
    let cfg = quick_config(1e-3, 2000);
    let values = [0.5, 0.3, 0.7];
    let forward = sweep(&p, &cfg, SweepParam::Delta, &values, &SweepOptions { threads: Some(3), out_dir: None }).unwrap();
    let reversed: Vec<f64> = values.iter().rev().copied().collect();
    let backward = sweep(&p, &cfg, SweepParam::Delta, &reversed, &SweepOptions { threads: Some(1), out_dir: None }).unwrap();
    for row in &forward.rows {
        let other = backward.rows.iter().find(|r| r.value == row.value).unwrap();
        assert_eq!(row, other);
    }
    assert_eq!(forward.rows.iter().map(|r| r.value).collect::<Vec<_>>(), values);
}
