use serde::Serialize;

use super::{run_sequential, Corpora, RunConfig, RunResult};
use crate::error::{Error, Result};
use crate::stats::mean_ci;

const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// Mean average-accuracy over completed runs.
    pub mean_accuracy: Option<f64>,
    /// 0.95 Student-t half-width; needs at least two completed runs.
    pub ci_halfwidth: Option<f64>,
    /// Completed runs.
    pub n_runs: usize,
    pub n_failed: usize,
}

impl SweepPoint {
    /// A point is valid when at least one run completed.
    pub fn is_valid(&self) -> bool {
        self.mean_accuracy.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub best_lambda: Option<f64>,
    /// Every run, grouped by λ in grid order, seeds ascending.
    pub runs: Vec<RunResult>,
}

/// Runs the configurations on a pool of `jobs` workers. Results come back in
/// input order regardless of scheduling.
pub fn run_many(configs: &[RunConfig], corpora: &Corpora, jobs: usize) -> Result<Vec<RunResult>> {
    #[cfg(feature = "parallel")]
    if jobs > 1 && configs.len() > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        return pool.install(|| configs.par_iter().map(|c| run_sequential(c, corpora, None)).collect());
    }
    let _ = jobs;
    configs.iter().map(|c| run_sequential(c, corpora, None)).collect()
}

/// Grid search over λ with `n_runs` seeds per point. Run `r` of every point
/// uses seed `base.seed + r`.
pub fn sweep_lambda(
    base: &RunConfig,
    grid: &[f64],
    n_runs: usize,
    corpora: &Corpora,
    jobs: usize,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    if n_runs < 2 {
        return Err(Error::Config(format!(
            "a sweep needs at least 2 runs per point, got {n_runs}"
        )));
    }
    let configs: Vec<RunConfig> = grid
        .iter()
        .flat_map(|&lambda| {
            (0..n_runs as u64).map(move |r| RunConfig {
                lambda,
                seed: base.seed.wrapping_add(r),
                ..base.clone()
            })
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let runs = run_many(&configs, corpora, jobs)?;

    let mut points = Vec::with_capacity(grid.len());
    for (i, &lambda) in grid.iter().enumerate() {
        let group = &runs[i * n_runs..(i + 1) * n_runs];
        let acc: Vec<f64> = group.iter().filter_map(|r| r.average_accuracy).collect();
        let (mean_accuracy, ci_halfwidth) = match acc.len() {
            0 => (None, None),
            1 => (Some(acc[0]), None),
            _ => {
                let (m, h) = mean_ci(&acc, CONFIDENCE)?;
                (Some(m), Some(h))
            }
        };
        points.push(SweepPoint {
            lambda,
            mean_accuracy,
            ci_halfwidth,
            n_runs: acc.len(),
            n_failed: group.len() - acc.len(),
        });
    }
    // First maximum wins on ties.
    let best_lambda = points
        .iter()
        .filter_map(|p| Some((p.lambda, p.mean_accuracy?)))
        .fold(None::<(f64, f64)>, |best, (l, m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((l, m)),
        })
        .map(|(l, _)| l);
    Ok(SweepResult {
        points,
        best_lambda,
        runs,
    })
}
