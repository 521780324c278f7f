use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{McReport, ReplicationRow};
use crate::analysis::predicted_scaled_moments;
use crate::{linalg, Error, Result};

pub const REPLICATION_CSV: &str = "replications.csv";
pub const SNAPSHOT_CSV: &str = "snapshots.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Clone, Debug, PartialEq)]
pub struct EmittedFiles {
    pub replications: PathBuf,
    pub snapshots: PathBuf,
    pub summary: PathBuf,
}

#[derive(Serialize)]
struct Summary<'a> {
    spec: &'a super::SpecEcho,
    validation: &'a crate::analysis::ValidationReport,
    constants: &'a crate::analysis::LimitConstants,
    prediction: &'a crate::analysis::AsymptoticPrediction,
    predicted_mean: Vec<f64>,
    predicted_covariance: Vec<Vec<f64>>,
    empirical: &'a super::Moments,
    divergence_fraction: f64,
    verdicts: &'a [super::Verdict],
    slopes: &'a [super::SlopeRecord],
    all_passed: bool,
}

/// Shortest text that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_replications(report: &McReport, path: &Path) -> Result<()> {
    let d = report.prediction.dimension();
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let mut header = vec!["replication".to_string(), "n".to_string()];
    header.extend((1..=d).map(|i| format!("scaled_theta_{i}")));
    header.extend(["scaled_mu", "diverged", "queries"].map(String::from));
    w.write_record(&header).map_err(csv_error(path))?;
    for row in &report.rows {
        let mut record = vec![row.replication.to_string(), row.n.to_string()];
        record.extend(row.scaled_theta.iter().map(|x| num(*x)));
        record.push(num(row.scaled_mu));
        record.push(row.diverged.to_string());
        record.push(row.queries.to_string());
        w.write_record(&record).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

fn write_snapshots(report: &McReport, path: &Path) -> Result<()> {
    let d = report.prediction.dimension();
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let mut header = vec!["replication".to_string(), "n".to_string()];
    header.extend((1..=d).map(|i| format!("theta_error_{i}")));
    header.push("mu_error".to_string());
    header.extend((1..=d).map(|i| format!("theta_bar_error_{i}")));
    w.write_record(&header).map_err(csv_error(path))?;
    for s in &report.snapshots {
        let mut record = vec![s.replication.to_string(), s.n.to_string()];
        record.extend(s.theta_error.iter().map(|x| num(*x)));
        record.push(num(s.mu_error));
        record.extend(s.theta_bar_error.iter().map(|x| num(*x)));
        w.write_record(&record).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Writes the per-replication CSV, the snapshot CSV and the summary JSON
/// into `dir`, creating it if needed.
pub fn emit(report: &McReport, dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let files = EmittedFiles {
        replications: dir.join(REPLICATION_CSV),
        snapshots: dir.join(SNAPSHOT_CSV),
        summary: dir.join(SUMMARY_JSON),
    };
    write_replications(report, &files.replications)?;
    write_snapshots(report, &files.snapshots)?;

    let (mean, cov) = predicted_scaled_moments(&report.prediction);
    let summary = Summary {
        spec: &report.spec,
        validation: &report.validation,
        constants: &report.constants,
        prediction: &report.prediction,
        predicted_mean: mean.iter().copied().collect(),
        predicted_covariance: linalg::rows(&cov),
        empirical: &report.moments,
        divergence_fraction: report.divergence_fraction,
        verdicts: &report.verdicts,
        slopes: &report.slopes,
        all_passed: report.all_passed(),
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|source| Error::Json {
        context: "summary".into(),
        source,
    })?;
    fs::write(&files.summary, text + "\n").map_err(io_error(&files.summary))?;
    Ok(files)
}

/// Parses a per-replication CSV written by [`emit`].
pub fn read_replication_csv(path: &Path) -> Result<Vec<ReplicationRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let headers = r.headers().map_err(csv_error(path))?.clone();
    let d = headers.iter().filter(|h| h.starts_with("scaled_theta_")).count();
    let bad = |what: &str| Error::InvalidConfig(format!("{}: malformed {what}", path.display()));
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_error(path))?;
        let field = |i: usize| record.get(i).ok_or_else(|| bad("row"));
        let float = |i: usize| field(i)?.parse::<f64>().map_err(|_| bad("number"));
        let int = |i: usize| field(i)?.parse::<u64>().map_err(|_| bad("integer"));
        rows.push(ReplicationRow {
            replication: int(0)?,
            n: int(1)?,
            scaled_theta: (0..d).map(|i| float(2 + i)).collect::<Result<_>>()?,
            scaled_mu: float(2 + d)?,
            diverged: field(3 + d)?.parse().map_err(|_| bad("flag"))?,
            queries: int(4 + d)?,
        });
    }
    Ok(rows)
}

/// Loads the summary JSON of an output directory as a generic document
/// (non-finite numbers are written as `null`).
pub fn read_summary(dir: &Path) -> Result<serde_json::Value> {
    let path = dir.join(SUMMARY_JSON);
    let text = fs::read_to_string(&path).map_err(io_error(&path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}
