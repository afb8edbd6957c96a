use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use andre::export::{self, fmt_f64};
use andre::problems::{self, IvpProblem, DEFAULT_KAPPA0};
use andre::report::{run_with, RunOptions, RunReport};
use andre::refine::AdamSolver;
use andre::sweep::{sweep, SweepOptions, SweepParam, SWEEP_FILE};
use andre::{AndreConfig, Ansatz};

const EXIT_USAGE: u8 = 1;
const EXIT_ABORTED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "andre", version, about = "Adaptive neural domain refinement for initial value problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and export the run.
    Solve(RunArgs),
    /// Solve once per value of sigma or delta.
    Sweep {
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// List the built-in problems.
    ListProblems,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    problem: String,
    /// Verification error bound [default: per problem]
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 5)]
    order: usize,
    #[arg(long, default_value_t = 100_000)]
    epochs: usize,
    /// Incremental learning steps [default: per problem]
    #[arg(long)]
    increments: Option<usize>,
    #[arg(long, default_value_t = 9)]
    ntp: usize,
    #[arg(long, default_value_t = 11)]
    nvp: usize,
    #[arg(long, default_value = "hard", value_parser = parse_ansatz)]
    ansatz: Ansatz,
    /// Truncate the time domain at this value.
    #[arg(long)]
    t_end: Option<f64>,
    /// Initial predator count for ivp4.
    #[arg(long)]
    kappa0: Option<f64>,
    #[arg(long, default_value_t = 5)]
    hidden: usize,
    #[arg(long, default_value_t = 51)]
    neuron_cap: usize,
    #[arg(long, default_value_t = 0.1)]
    min_size: f64,
    /// Comma-separated learning-rate ladder.
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.006,0.036")]
    ladder: Vec<f64>,
    /// Retry from the previous attempt's weights instead of zeros.
    #[arg(long)]
    warm_start: bool,
    /// Also report errors at verification points.
    #[arg(long)]
    verification_metrics: bool,
    /// Use the full published settings for the problem, ignoring the overrides above.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, default_value = "andre-out")]
    out: PathBuf,
}

fn parse_ansatz(s: &str) -> Result<Ansatz, String> {
    s.parse::<Ansatz>().map_err(|e| e.to_string())
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse::<SweepParam>().map_err(|e| e.to_string())
}

impl RunArgs {
    fn problem(&self) -> andre::Result<IvpProblem> {
        let base = match (self.problem.as_str(), self.kappa0) {
            ("ivp4", Some(k)) => problems::ivp4_with_kappa0(k),
            (_, Some(_)) => {
                return Err(andre::Error::InvalidConfig("--kappa0 only applies to ivp4".into()))
            }
            (name, None) => problems::by_name(name)?,
        };
        match self.t_end {
            Some(t) if !self.paper_scale => base.with_t_end(t),
            _ => Ok(base),
        }
    }

    fn config(&self, problem: &IvpProblem) -> AndreConfig {
        let mut cfg = AndreConfig::for_problem(problem);
        if self.paper_scale {
            warn!("--paper-scale: using published settings; other run flags are ignored");
            return cfg;
        }
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        if let Some(k) = self.increments {
            cfg.train.increments = k;
        }
        cfg.delta = self.delta;
        cfg.order = self.order;
        cfg.train.epochs = self.epochs;
        cfg.n_tp = self.ntp;
        cfg.n_vp = self.nvp;
        cfg.ansatz = self.ansatz;
        cfg.base_hidden = self.hidden;
        cfg.neuron_cap = self.neuron_cap;
        cfg.min_subdomain_size = self.min_size;
        cfg.learning_rate_ladder = self.ladder.clone();
        cfg.warm_start = self.warm_start;
        cfg
    }
}

fn print_report(report: &RunReport) {
    let p = &report.problem;
    println!("problem {} on [{}, {}]", p.name, p.t_start, p.t_end);
    println!("{:>4} {:>12} {:>12} {:>12} {:>12} {:>4} {:>8} {:>4}", "l", "t_left", "t_right", "E_TP", "E_VP", "H", "alpha", "att");
    for r in &report.subdomains {
        println!(
            "{:>4} {:>12.6} {:>12.6} {:>12.4e} {:>12.4e} {:>4} {:>8} {:>4}",
            r.index, r.t_left, r.t_right, r.training_error, r.verification_error, r.hidden, r.learning_rate, r.attempts
        );
    }
    let a = &report.aggregates;
    let show = |x: Option<f64>| x.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
    println!(
        "h = {}  l1 = {}  linf = {}  epochs = {}  wall = {:.1}s",
        a.h,
        show(a.l1),
        show(a.linf),
        a.total_epochs,
        a.wall_time_s
    );
    match &report.status {
        andre::RunStatus::Completed => println!("status: completed"),
        andre::RunStatus::Aborted { reason } => println!("status: aborted ({reason})"),
    }
}

fn solve(args: &RunArgs) -> andre::Result<u8> {
    let problem = args.problem()?;
    let config = args.config(&problem);
    let options = RunOptions {
        verification_metrics: args.verification_metrics,
    };
    let report = run_with(&problem, &config, &options, &mut AdamSolver)?;
    export::write_all(&report, &args.out)?;
    print_report(&report);
    if args.paper_scale {
        if let Some(pubd) = problem.published() {
            let show = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "-".into());
            println!(
                "published: h = {}  l1 = {}  linf = {}",
                pubd.subdomains,
                show(pubd.l1),
                show(pubd.linf)
            );
        }
    }
    println!("wrote {}", args.out.display());
    Ok(if report.is_completed() { 0 } else { EXIT_ABORTED })
}

fn run_sweep(param: SweepParam, values: &[f64], args: &RunArgs) -> andre::Result<u8> {
    let problem = args.problem()?;
    let config = args.config(&problem);
    let table = sweep(
        &problem,
        &config,
        param,
        values,
        &SweepOptions {
            threads: None,
            out_dir: Some(args.out.clone()),
        },
    )?;
    let show = |x: Option<f64>| x.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
    println!("{:>10} {:>4} {:>12} {:>12} {:>12} {:>10}", param.to_string(), "h", "l1", "mean E_VP", "mean E_TP", "status");
    for r in &table.rows {
        println!(
            "{:>10} {:>4} {:>12} {:>12} {:>12} {:>10}",
            fmt_f64(r.value),
            r.h,
            show(r.l1),
            show(r.mean_verification_error),
            show(r.mean_training_error),
            if r.completed { "completed" } else { "aborted" }
        );
    }
    println!("wrote {}", args.out.join(SWEEP_FILE).display());
    Ok(if table.rows.iter().all(|r| r.completed) { 0 } else { EXIT_ABORTED })
}

fn list_problems() {
    for p in problems::registry() {
        let d = p.defaults();
        println!(
            "{:<10} [{}, {}]  u0 = {:?}  sigma = {}  increments = {}",
            p.name(),
            p.t_start(),
            p.t_end(),
            p.initial(),
            fmt_f64(d.sigma),
            d.increments
        );
        println!("           {}", p.description());
    }
    println!("(ivp4 accepts --kappa0, default {DEFAULT_KAPPA0})");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Sweep { param, values, run } => run_sweep(*param, values, run),
        Command::ListProblems => {
            list_problems();
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
