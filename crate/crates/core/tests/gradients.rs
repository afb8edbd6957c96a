//! Hand-derived gradients checked against central finite differences.

use andre::net::weight_count;
use andre::problems::{self, IvpProblem};
use andre::{Ansatz, DenseNet1H, ScnfModel};
use proptest::prelude::*;

fn fd<F: Fn(&[f64]) -> f64>(f: F, w: &[f64]) -> Vec<f64> {
    let mut x = w.to_vec();
    (0..w.len())
        .map(|i| {
            let h = 1e-6 * w[i].abs().max(1.0);
            x[i] = w[i] + h;
            let up = f(&x);
            x[i] = w[i] - h;
            let down = f(&x);
            x[i] = w[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Max-norm relative error of `got` against `want`.
fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    got.iter()
        .zip(want)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

fn net_strategy() -> impl Strategy<Value = DenseNet1H> {
    prop::sample::select(vec![1usize, 5, 11])
        .prop_flat_map(|h| prop::collection::vec(-1.5..1.5f64, weight_count(h)))
        .prop_map(|w| DenseNet1H::from_flat(&w))
}

fn problem_for(o: usize) -> IvpProblem {
    if o == 1 {
        problems::ivp1()
    } else {
        problems::ivp4()
    }
}

fn model_strategy() -> impl Strategy<Value = ScnfModel> {
    (
        prop::sample::select(vec![1usize, 5, 11]),
        prop::sample::select(vec![1usize, 5]),
        prop::sample::select(vec![1usize, 2]),
        prop::sample::select(vec![Ansatz::HardIc, Ansatz::LearnedIc]),
        0.0..3.0f64,
    )
        .prop_flat_map(|(h, m, o, ansatz, t0)| {
            let n = o * m * weight_count(h);
            (
                prop::collection::vec(-0.5..0.5f64, n),
                prop::collection::vec(0.5..4.0f64, o),
            )
                .prop_map(move |(w, iv)| {
                    let mut model = ScnfModel::zeros(ansatz, m, h, iv, t0, t0 + 1.0);
                    model.set_weights(&w);
                    model
                })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn network_value_gradient_matches_fd(net in net_strategy(), t in -2.0..2.0f64) {
        let g = net.grad_value_weights(t);
        let oracle = fd(|w| DenseNet1H::from_flat(w).forward(t), &net.to_flat());
        prop_assert!(rel_err(g.as_slice(), &oracle) < 1e-6);
    }

    #[test]
    fn network_dt_gradient_matches_fd(net in net_strategy(), t in -2.0..2.0f64) {
        let g = net.grad_dt_weights(t);
        let oracle = fd(|w| DenseNet1H::from_flat(w).forward_dt(t), &net.to_flat());
        prop_assert!(rel_err(g.as_slice(), &oracle) < 1e-6);
    }

    #[test]
    fn network_time_derivative_matches_fd(net in net_strategy(), t in -2.0..2.0f64) {
        let h = 1e-5;
        let oracle = (net.forward(t + h) - net.forward(t - h)) / (2.0 * h);
        prop_assert!((net.forward_dt(t) - oracle).abs() < 1e-7 * oracle.abs().max(1.0));
    }

    #[test]
    fn trial_time_derivative_matches_fd(model in model_strategy(), frac in 0.0..1.0f64) {
        let t = model.t0() + frac;
        let h = 1e-6;
        let up = model.trial_value(t + h);
        let down = model.trial_value(t - h);
        let oracle: Vec<f64> = up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        prop_assert!(rel_err(&model.trial_dt(t), &oracle) < 1e-6);
    }

    #[test]
    fn cost_gradient_matches_fd(model in model_strategy()) {
        let problem = problem_for(model.equations());
        let points: Vec<f64> = (0..10).map(|i| model.t0() + i as f64 / 9.0).collect();
        let grad = model.cost_gradient(&problem, &points).unwrap();
        let oracle = fd(
            |w| {
                let mut m = model.clone();
                m.set_weights(w);
                m.cost(&problem, &points).unwrap()
            },
            &model.weights_flat(),
        );
        let err = rel_err(&grad, &oracle);
        prop_assert!(err < 1e-5, "relative error {err:e}");
    }
}

#[test]
fn zero_residual_gives_zero_gradient() {
    let problem = problems::constant(1.0, 1.0).unwrap();
    let model = ScnfModel::zeros(Ansatz::HardIc, 3, 5, vec![1.0], 0.0, 1.0);
    let grad = model.cost_gradient(&problem, &[0.0, 0.5, 1.0]).unwrap();
    assert!(grad.iter().all(|g| *g == 0.0));
}
