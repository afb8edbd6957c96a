//! Parameter sweeps over σ or δ.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{self, fmt_f64};
use crate::problems::IvpProblem;
use crate::refine::AndreConfig;
use crate::report::{run, RunReport};

pub const THREADS_ENV: &str = "ANDRE_THREADS";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Sigma,
    Delta,
}

impl SweepParam {
    pub fn apply(self, config: &AndreConfig, value: f64) -> AndreConfig {
        let mut cfg = config.clone();
        match self {
            SweepParam::Sigma => cfg.sigma = value,
            SweepParam::Delta => cfg.delta = value,
        }
        cfg
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Sigma => "sigma",
            SweepParam::Delta => "delta",
        })
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma" => Ok(SweepParam::Sigma),
            "delta" => Ok(SweepParam::Delta),
            other => Err(Error::InvalidConfig(format!(
                "unknown sweep parameter '{other}' (expected sigma or delta)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub h: usize,
    pub l1: Option<f64>,
    pub linf: Option<f64>,
    pub mean_verification_error: Option<f64>,
    pub mean_training_error: Option<f64>,
    pub total_epochs: usize,
    pub completed: bool,
}

impl SweepRow {
    fn from_report(value: f64, r: &RunReport) -> Self {
        let a = &r.aggregates;
        Self {
            value,
            h: a.h,
            l1: a.l1,
            linf: a.linf,
            mean_verification_error: a.mean_verification_error,
            mean_training_error: a.mean_training_error,
            total_epochs: a.total_epochs,
            completed: r.is_completed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` reads `ANDRE_THREADS`, falling back to rayon's default.
    pub threads: Option<usize>,
    /// When set, each run is exported to `<dir>/<param>_<value>/` and the table to `<dir>/sweep.csv`.
    pub out_dir: Option<PathBuf>,
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs one solve per value. Rows come back in the order of `values`.
pub fn sweep(
    problem: &IvpProblem,
    base: &AndreConfig,
    param: SweepParam,
    values: &[f64],
    options: &SweepOptions,
) -> Result<SweepTable> {
    let configs: Vec<AndreConfig> = values.iter().map(|&v| param.apply(base, v)).collect();
    for cfg in &configs {
        cfg.validate()?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.threads.or_else(threads_from_env) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let reports: Vec<Result<RunReport>> =
        pool.install(|| configs.par_iter().map(|cfg| run(problem, cfg)).collect());

    let mut rows = Vec::with_capacity(values.len());
    for (&value, report) in values.iter().zip(reports) {
        let report = report?;
        if let Some(dir) = &options.out_dir {
            export::write_all(&report, &run_dir(dir, param, value))?;
        }
        rows.push(SweepRow::from_report(value, &report));
    }
    let table = SweepTable { param, rows };
    if let Some(dir) = &options.out_dir {
        write_table(&table, &dir.join(SWEEP_FILE))?;
    }
    Ok(table)
}

pub fn run_dir(base: &Path, param: SweepParam, value: f64) -> PathBuf {
    base.join(format!("{param}_{}", fmt_f64(value)))
}

pub fn write_table(table: &SweepTable, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record([
        table.param.to_string().as_str(),
        "h",
        "l1",
        "linf",
        "mean_E_VP",
        "mean_E_TP",
        "total_epochs",
        "status",
    ])
    .map_err(csv_err)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in &table.rows {
        w.write_record([
            fmt_f64(r.value),
            r.h.to_string(),
            opt(r.l1),
            opt(r.linf),
            opt(r.mean_verification_error),
            opt(r.mean_training_error),
            r.total_epochs.to_string(),
            if r.completed { "completed" } else { "aborted" }.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
