//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are still evaluated and reported
//! with their measured values; they only stop counting towards the exit code.
//! An unexpected pass of one of them is reported too.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use andre::export::{self, read_summary};
use andre::net::weight_count;
use andre::problems::{self, rk4_solve, IvpProblem};
use andre::report::run;
use andre::sweep::{run_dir, sweep, SweepOptions, SweepParam};
use andre::{Ansatz, AndreConfig, RunReport, ScnfModel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SEED: u64 = 0x5EED_A4D7E;

// criterion 1
const GRAD_CONFIGS: usize = 100;
const GRAD_REL_TOL: f64 = 1e-5;
const GRAD_FD_STEP: f64 = 1e-6;
const GRAD_TIME_S: f64 = 10.0;
// criterion 2
const IC_DRAWS: usize = 1000;
const IC_TIME_S: f64 = 1.0;
// criterion 3
const CLOSED_FORM_POINTS: usize = 100;
const CLOSED_FORM_FD_STEP: f64 = 1e-6;
const CLOSED_FORM_RESIDUAL_TOL: f64 = 1e-6;
const CLOSED_FORM_IC_TOL: f64 = 1e-12;
// criterion 4
const RK4_ORDER: f64 = 4.0;
const RK4_ORDER_TOL: f64 = 0.1;
const RK4_ENDPOINT_TOL: f64 = 1e-8;
// criterion 5
const C5_T_END: f64 = 5.0;
const C5_SIGMA: f64 = 1.0;
const C5_DELTA: f64 = 0.5;
const C5_INCREMENTS: usize = 2;
const C5_EPOCHS: usize = 100_000;
const C5_H_RANGE: (usize, usize) = (3, 6);
const C5_L1_MAX: f64 = 5e-3;
// criterion 6
const C6_T_END: f64 = 5.0;
const C6_SIGMAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Criteria that cannot hold as written; the analysis is in the README.
const KNOWN_UNATTAINABLE: &[(u32, &str)] = &[
    (3, "FD roundoff (ivp2) and the cos^2(2t) singularity of the implicit residual (ivp3) exceed 1e-6 in double precision"),
    (4, "classic RK4 at h = 0.1 has endpoint error 3.33e-7 on u' = -u"),
];

struct Line {
    id: u32,
    passed: bool,
    detail: String,
}

fn fd_gradient(model: &ScnfModel, problem: &IvpProblem, points: &[f64]) -> Vec<f64> {
    let w = model.weights_flat();
    let mut m = model.clone();
    let mut x = w.clone();
    (0..w.len())
        .map(|i| {
            let h = GRAD_FD_STEP * w[i].abs().max(1.0);
            x[i] = w[i] + h;
            m.set_weights(&x);
            let up = m.cost(problem, points).unwrap();
            x[i] = w[i] - h;
            m.set_weights(&x);
            let down = m.cost(problem, points).unwrap();
            x[i] = w[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn criterion_1() -> Line {
    let mut rng = StdRng::seed_from_u64(SEED);
    let started = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..GRAD_CONFIGS {
        let h = [1, 5, 11][i % 3];
        let m = [1, 5][(i / 3) % 2];
        let o = [1, 2][(i / 6) % 2];
        let ansatz = [Ansatz::HardIc, Ansatz::LearnedIc][(i / 12) % 2];
        let problem = if o == 1 { problems::ivp1() } else { problems::ivp4() };
        let t0 = rng.random_range(0.0..3.0);
        let iv: Vec<f64> = (0..o).map(|_| rng.random_range(0.5..4.0)).collect();
        let w: Vec<f64> = (0..o * m * weight_count(h)).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut model = ScnfModel::zeros(ansatz, m, h, iv, t0, t0 + 1.0);
        model.set_weights(&w);
        let points: Vec<f64> = (0..10).map(|k| t0 + k as f64 / 9.0).collect();
        let grad = model.cost_gradient(&problem, &points).unwrap();
        let oracle = fd_gradient(&model, &problem, &points);
        let scale = oracle.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-12);
        let err = grad.iter().zip(&oracle).fold(0.0f64, |a, (g, f)| a.max((g - f).abs())) / scale;
        worst = worst.max(err);
    }
    let secs = started.elapsed().as_secs_f64();
    Line {
        id: 1,
        passed: worst < GRAD_REL_TOL && secs < GRAD_TIME_S,
        detail: format!("{GRAD_CONFIGS} configs, max rel err {worst:.2e} (< {GRAD_REL_TOL:e}), {secs:.2}s (< {GRAD_TIME_S}s)"),
    }
}

fn criterion_2() -> Line {
    let mut rng = StdRng::seed_from_u64(SEED + 2);
    let started = Instant::now();
    let mut mismatches = 0;
    for _ in 0..IC_DRAWS {
        let h = rng.random_range(1..=11);
        let m = rng.random_range(1..=5);
        let o = rng.random_range(1..=2);
        let t0 = rng.random_range(-50.0..50.0);
        let iv: Vec<f64> = (0..o).map(|_| rng.random_range(-100.0..100.0)).collect();
        let w: Vec<f64> = (0..o * m * weight_count(h)).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut model = ScnfModel::zeros(Ansatz::HardIc, m, h, iv.clone(), t0, t0 + 1.0);
        model.set_weights(&w);
        if model.trial_value(t0) != iv {
            mismatches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    Line {
        id: 2,
        passed: mismatches == 0 && secs < IC_TIME_S,
        detail: format!("{IC_DRAWS} draws, {mismatches} inexact, {secs:.3}s (< {IC_TIME_S}s)"),
    }
}

fn criterion_3() -> Line {
    let mut passed = true;
    let mut parts = Vec::new();
    for p in [problems::ivp1(), problems::ivp2(), problems::ivp3()] {
        let (a, b) = (p.t_start(), p.t_end());
        let ic_err = (p.exact(a).unwrap()[0] - p.initial()[0]).abs();
        let mut max_g = 0.0f64;
        let mut over = 0;
        for i in 0..CLOSED_FORM_POINTS {
            let t = a + (b - a) * i as f64 / (CLOSED_FORM_POINTS - 1) as f64;
            let h = CLOSED_FORM_FD_STEP;
            let du = (p.exact(t + h).unwrap()[0] - p.exact(t - h).unwrap()[0]) / (2.0 * h);
            let g = p.residual(t, &p.exact(t).unwrap(), &[du])[0].abs();
            max_g = max_g.max(g);
            if !(g < CLOSED_FORM_RESIDUAL_TOL) {
                over += 1;
            }
        }
        let ok = over == 0 && ic_err < CLOSED_FORM_IC_TOL;
        passed &= ok;
        parts.push(format!("{}: max|G| {max_g:.2e}, {over} pts >= {CLOSED_FORM_RESIDUAL_TOL:e}, |u(t0)-u0| {ic_err:.1e}", p.name()));
    }
    Line {
        id: 3,
        passed,
        detail: parts.join("; "),
    }
}

fn criterion_4() -> Line {
    let p = problems::exponential_decay(1.0, 1.0, 1.0).unwrap();
    let exact = (-1.0f64).exp();
    let steps = [10usize, 20, 40, 80];
    let errs: Vec<f64> = steps
        .iter()
        .map(|&n| (rk4_solve(&p, n).unwrap().last()[0] - exact).abs())
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order_ok = orders.iter().all(|q| (q - RK4_ORDER).abs() <= RK4_ORDER_TOL);
    let endpoint_ok = errs[0] < RK4_ENDPOINT_TOL;
    Line {
        id: 4,
        passed: order_ok && endpoint_ok,
        detail: format!(
            "orders {:?} ({} within {RK4_ORDER}±{RK4_ORDER_TOL}); endpoint error at 10 steps {:.3e} ({} < {RK4_ENDPOINT_TOL:e})",
            orders.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>(),
            if order_ok { "all" } else { "not all" },
            errs[0],
            if endpoint_ok { "is" } else { "NOT" },
        ),
    }
}

fn c5_setup() -> (IvpProblem, AndreConfig) {
    let p = problems::ivp3().with_t_end(C5_T_END).unwrap();
    let mut cfg = AndreConfig::for_problem(&p);
    cfg.sigma = C5_SIGMA;
    cfg.delta = C5_DELTA;
    cfg.train.increments = C5_INCREMENTS;
    cfg.train.epochs = C5_EPOCHS;
    (p, cfg)
}

fn c5_run(dir: &Path) -> RunReport {
    let (p, cfg) = c5_setup();
    let report = run(&p, &cfg).unwrap();
    export::write_all(&report, dir).unwrap();
    report
}

fn criterion_5(report: &RunReport) -> Line {
    let a = &report.aggregates;
    let l1 = a.l1.unwrap_or(f64::INFINITY);
    let in_range = (C5_H_RANGE.0..=C5_H_RANGE.1).contains(&a.h);
    Line {
        id: 5,
        passed: report.is_completed() && in_range && l1 <= C5_L1_MAX,
        detail: format!(
            "h = {} (in [{}, {}]: {in_range}), l1 = {l1:.4e} (<= {C5_L1_MAX:e}), {} epochs, {:.1}s",
            a.h, C5_H_RANGE.0, C5_H_RANGE.1, a.total_epochs, a.wall_time_s
        ),
    }
}

fn c6_sweep(dir: &Path) -> Vec<RunReport> {
    let p = problems::ivp2().with_t_end(C6_T_END).unwrap();
    let cfg = AndreConfig::for_problem(&p);
    let opts = SweepOptions {
        threads: Some(C6_SIGMAS.len()),
        out_dir: Some(dir.to_path_buf()),
    };
    sweep(&p, &cfg, SweepParam::Sigma, &C6_SIGMAS, &opts).unwrap();
    C6_SIGMAS
        .iter()
        .map(|&s| read_summary(&run_dir(dir, SweepParam::Sigma, s).join(export::SUMMARY_FILE)).unwrap())
        .collect()
}

fn criterion_6(reports: &[RunReport]) -> Line {
    let hs: Vec<usize> = reports.iter().map(|r| r.aggregates.h).collect();
    let monotone = hs.windows(2).all(|w| w[0] <= w[1]);
    let mut bounded = true;
    let mut parts = Vec::new();
    for (r, sigma) in reports.iter().zip(C6_SIGMAS) {
        let mean_vp = r.aggregates.mean_verification_error.unwrap_or(f64::INFINITY);
        bounded &= r.is_completed() && mean_vp <= sigma;
        parts.push(format!(
            "sigma {sigma:e}: h {} mean E_VP {mean_vp:.3e} {}",
            r.aggregates.h,
            if r.is_completed() { "completed" } else { "aborted" }
        ));
    }
    Line {
        id: 6,
        passed: monotone && bounded,
        detail: format!("h non-decreasing: {monotone}; {}", parts.join("; ")),
    }
}

fn invariant_violations(r: &RunReport) -> Vec<String> {
    let mut v = Vec::new();
    let b = &r.boundaries;
    if b.first() != Some(&r.problem.t_start) || b.last() != Some(&r.problem.t_end) {
        v.push("boundaries do not span the domain".into());
    }
    if !b.windows(2).all(|w| w[0] < w[1]) {
        v.push("boundaries not strictly increasing".into());
    }
    if r.subdomains.len() + 1 != b.len() {
        v.push("subdomain count does not match boundaries".into());
    }
    for (l, s) in r.subdomains.iter().enumerate() {
        if (s.t_left, s.t_right) != (b[l], b[l + 1]) {
            v.push(format!("subdomain {} bounds differ from boundary list", s.index));
        }
        if !(s.verification_error <= r.config.sigma) {
            v.push(format!("subdomain {} E_VP above sigma", s.index));
        }
        let model = &r.models[l];
        let expected = if l == 0 { r.problem.initial.clone() } else { r.subdomains[l - 1].handoff.clone() };
        if model.initial_value() != expected.as_slice() || model.trial_value(s.t_left) != expected {
            v.push(format!("handoff into subdomain {} not exact", s.index));
        }
        if model.trial_value(s.t_right) != s.handoff {
            v.push(format!("stored handoff of subdomain {} differs from the model", s.index));
        }
    }
    let mut seen = 0;
    for a in &r.attempts {
        if a.subdomain > seen {
            seen = a.subdomain;
            if a.hidden != r.config.base_hidden || a.learning_rate != r.config.learning_rate_ladder[0] {
                v.push(format!("subdomain {} not entered with reset parameters", a.subdomain));
            }
        }
    }
    v
}

fn criterion_7(reports: &[&RunReport]) -> Line {
    let completed: Vec<&&RunReport> = reports.iter().filter(|r| r.is_completed()).collect();
    let violations: Vec<String> = completed.iter().flat_map(|r| invariant_violations(r)).collect();
    Line {
        id: 7,
        passed: !completed.is_empty() && violations.is_empty(),
        detail: if violations.is_empty() {
            format!("{} completed runs checked, no violations", completed.len())
        } else {
            violations.join("; ")
        },
    }
}

fn criterion_8(a: &Path, b: &Path) -> Line {
    let x = fs::read(a.join(export::SUBDOMAINS_FILE)).unwrap();
    let y = fs::read(b.join(export::SUBDOMAINS_FILE)).unwrap();
    Line {
        id: 8,
        passed: x == y,
        detail: format!("subdomains.csv {} bytes vs {} bytes, identical: {}", x.len(), y.len(), x == y),
    }
}

fn criterion_9() -> Line {
    let out = Command::new(env!("CARGO_BIN_EXE_andre"))
        .args(["solve", "--help"])
        .output()
        .unwrap();
    let documented = String::from_utf8_lossy(&out.stdout).contains("--paper-scale");
    Line {
        id: 9,
        passed: documented,
        detail: format!("not gated; `andre solve --paper-scale` available: {documented}"),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let (d5a, d5b, d6) = (tmp.path().join("c5a"), tmp.path().join("c5b"), tmp.path().join("c6"));

    let mut lines = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()];

    let (r5a, r5b, r6) = std::thread::scope(|s| {
        let a = s.spawn(|| c5_run(&d5a));
        let b = s.spawn(|| c5_run(&d5b));
        let c = s.spawn(|| c6_sweep(&d6));
        (a.join().unwrap(), b.join().unwrap(), c.join().unwrap())
    });

    lines.push(criterion_5(&r5a));
    lines.push(criterion_6(&r6));
    let mut all: Vec<&RunReport> = vec![&r5a, &r5b];
    all.extend(r6.iter());
    lines.push(criterion_7(&all));
    lines.push(criterion_8(&d5a, &d5b));
    lines.push(criterion_9());

    let mut unexpected = 0;
    for line in &lines {
        let known = KNOWN_UNATTAINABLE.iter().find(|(id, _)| *id == line.id);
        let tag = match (line.passed, known) {
            (true, None) => "PASS".to_string(),
            (true, Some(_)) => "PASS (listed as unattainable; update the list)".to_string(),
            (false, Some((_, why))) => format!("FAIL (known: {why})"),
            (false, None) => {
                unexpected += 1;
                "FAIL".to_string()
            }
        };
        println!("criterion {}: {tag} | {}", line.id, line.detail);
    }
    let passed = lines.iter().filter(|l| l.passed).count();
    println!(
        "acceptance: {passed}/{} passed, {} failed ({} known unattainable), {:.1}s",
        lines.len(),
        lines.len() - passed,
        lines.len() - passed - unexpected,
        started.elapsed().as_secs_f64()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
