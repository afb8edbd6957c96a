//! Writing run reports to disk.
//!
//! Floats are written in their shortest round-trip form.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::report::RunReport;

pub const SUMMARY_FILE: &str = "summary.json";
pub const SUBDOMAINS_FILE: &str = "subdomains.csv";
pub const SOLUTION_FILE: &str = "solution.csv";
pub const BOUNDARIES_FILE: &str = "boundaries.csv";
pub const ATTEMPTS_FILE: &str = "attempts.csv";

/// Shortest string that parses back to exactly `x`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_summary(report: &RunReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_subdomains(report: &RunReport, path: &Path) -> Result<()> {
    let header = ["l", "t_left", "t_right", "E_TP", "E_VP", "H", "alpha", "attempts", "l1", "linf"]
        .map(String::from)
        .to_vec();
    let rows = report.subdomains.iter().map(|r| {
        vec![
            r.index.to_string(),
            fmt_f64(r.t_left),
            fmt_f64(r.t_right),
            fmt_f64(r.training_error),
            fmt_f64(r.verification_error),
            r.hidden.to_string(),
            fmt_f64(r.learning_rate),
            r.attempts.to_string(),
            opt(r.l1),
            opt(r.linf),
        ]
    });
    write_rows(path, header, rows)
}

pub fn write_solution(report: &RunReport, path: &Path) -> Result<()> {
    let o = report.problem.dimension;
    let has_ref = report.solution.iter().all(|r| r.reference.is_some());
    let mut header: Vec<String> = vec!["l".into(), "t".into()];
    header.extend((0..o).map(|q| format!("u{q}")));
    if has_ref {
        header.extend((0..o).map(|q| format!("ref{q}")));
        header.extend((0..o).map(|q| format!("abs_err{q}")));
    }
    header.push("is_left_boundary".into());
    let rows = report.solution.iter().map(|r| {
        let mut row = vec![r.subdomain.to_string(), fmt_f64(r.t)];
        row.extend(r.value.iter().copied().map(fmt_f64));
        if has_ref {
            row.extend(r.reference.iter().flatten().copied().map(fmt_f64));
            row.extend(r.abs_error.iter().flatten().copied().map(fmt_f64));
        }
        row.push(r.is_left_boundary.to_string());
        row
    });
    write_rows(path, header, rows)
}

pub fn write_boundaries(report: &RunReport, path: &Path) -> Result<()> {
    let verified = report.subdomains.len();
    let header = ["index", "t", "verified"].map(String::from).to_vec();
    let rows = report.boundaries.iter().enumerate().map(|(i, t)| {
        vec![i.to_string(), fmt_f64(*t), (i <= verified && verified > 0).to_string()]
    });
    write_rows(path, header, rows)
}

pub fn write_attempts(report: &RunReport, path: &Path) -> Result<()> {
    let header = [
        "l", "t_left", "t_right", "H", "alpha", "E_TP", "E_VP", "diverged", "epochs", "action",
    ]
    .map(String::from)
    .to_vec();
    let rows = report.attempts.iter().map(|a| {
        vec![
            a.subdomain.to_string(),
            fmt_f64(a.t_left),
            fmt_f64(a.t_right),
            a.hidden.to_string(),
            fmt_f64(a.learning_rate),
            fmt_f64(a.training_error),
            fmt_f64(a.verification_error),
            a.diverged.to_string(),
            a.epochs.to_string(),
            serde_json::to_value(a.action)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        ]
    });
    write_rows(path, header, rows)
}

/// Writes all report files into `dir`, creating it if needed.
pub fn write_all(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [SUMMARY_FILE, SUBDOMAINS_FILE, SOLUTION_FILE, BOUNDARIES_FILE, ATTEMPTS_FILE]
        .map(|f| dir.join(f));
    write_summary(report, &files[0])?;
    write_subdomains(report, &files[1])?;
    write_solution(report, &files[2])?;
    write_boundaries(report, &files[3])?;
    write_attempts(report, &files[4])?;
    Ok(files.to_vec())
}
