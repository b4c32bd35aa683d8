//! Deterministic CSV writers. Floats use Rust's shortest round-trip
//! formatting; absent values are empty fields.

use std::path::Path;

use super::{PruneReport, RunResult, SweepResult};
use crate::consolidation::ExplosionTrajectory;
use crate::error::{Error, Result};

pub const RUNS_HEADER: [&str; 7] = [
    "method",
    "penalty",
    "lambda",
    "seed",
    "status",
    "average_accuracy",
    "per_task_accuracy",
];
pub const SWEEP_HEADER: [&str; 7] = [
    "method",
    "penalty",
    "lambda",
    "mean_accuracy",
    "ci_halfwidth",
    "n_runs",
    "n_failed",
];
pub const PRUNE_HEADER: [&str; 5] = ["criterion", "fraction", "mean_accuracy", "ci_halfwidth", "n_runs"];
pub const EXPLOSION_HEADER: [&str; 3] = ["step", "original", "stabilized"];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_rows<const N: usize>(path: &Path, header: [&str; N], rows: Vec<[String; N]>) -> Result<()> {
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Config(format!("writing {}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per run; per-task accuracies joined with `;`.
pub fn write_runs_csv(path: &Path, runs: &[RunResult]) -> Result<()> {
    let rows = runs
        .iter()
        .map(|r| {
            [
                r.method.to_string(),
                r.penalty.as_str().to_string(),
                r.lambda.to_string(),
                r.seed.to_string(),
                r.status.as_str().to_string(),
                opt(r.average_accuracy),
                r.per_task_accuracy
                    .iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            ]
        })
        .collect();
    write_rows(path, RUNS_HEADER, rows)
}

/// One row per λ point.
pub fn write_sweep_csv(path: &Path, sweep: &SweepResult, method: &str, penalty: &str) -> Result<()> {
    let rows = sweep
        .points
        .iter()
        .map(|p| {
            [
                method.to_string(),
                penalty.to_string(),
                p.lambda.to_string(),
                opt(p.mean_accuracy),
                opt(p.ci_halfwidth),
                p.n_runs.to_string(),
                p.n_failed.to_string(),
            ]
        })
        .collect();
    write_rows(path, SWEEP_HEADER, rows)
}

/// One row per (criterion, fraction).
pub fn write_prune_csv(path: &Path, report: &PruneReport) -> Result<()> {
    let rows = report
        .curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| {
                [
                    c.criterion.to_string(),
                    p.fraction.to_string(),
                    p.mean_accuracy.to_string(),
                    opt(p.ci_halfwidth),
                    p.n_runs.to_string(),
                ]
            })
        })
        .collect();
    write_rows(path, PRUNE_HEADER, rows)
}

/// Distances per step; a trajectory that diverged leaves later cells empty.
pub fn write_explosion_csv(
    path: &Path,
    original: &ExplosionTrajectory,
    stabilized: &ExplosionTrajectory,
) -> Result<()> {
    let n = original.distances.len().max(stabilized.distances.len());
    let rows = (0..n)
        .map(|i| {
            [
                i.to_string(),
                opt(original.distances.get(i).copied()),
                opt(stabilized.distances.get(i).copied()),
            ]
        })
        .collect();
    write_rows(path, EXPLOSION_HEADER, rows)
}
