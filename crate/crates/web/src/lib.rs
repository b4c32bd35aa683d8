//! Single-weight demos behind the browser page in `www/`.
//!
//! The functions here are plain Rust so they can be tested natively; the
//! `wasm32` build adds thin JavaScript bindings on top.

use consolidate_core::consolidation::{explosion_demo, stabilization_factor, PenaltyForm};
use consolidate_core::nn::{clip_global_norm, GradientVector};
use thiserror::Error;

#[cfg(target_arch = "wasm32")]
mod bindings;

/// Upper bound on trajectory length and grid size.
pub const MAX_POINTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("{name} must be {expected}, got {value}")]
    Invalid {
        name: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error(transparent)]
    Core(#[from] consolidate_core::Error),
}

pub type Result<T> = std::result::Result<T, DemoError>;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(DemoError::Invalid {
            name,
            expected: "finite and > 0",
            value,
        })
    }
}

fn count(name: &'static str, n: usize, min: usize) -> Result<usize> {
    if (min..=MAX_POINTS).contains(&n) {
        Ok(n)
    } else {
        Err(DemoError::Invalid {
            name,
            expected: "within the supported range",
            value: n as f64,
        })
    }
}

/// `|w − w*|` after each plain-SGD step, starting from 1, under one penalty
/// form. The original form stops early once the distance overflows.
pub fn explosion_trajectory(alpha: f64, lambda: f64, omega: f64, steps: usize, stabilized: bool) -> Result<Vec<f64>> {
    positive("alpha", alpha)?;
    positive("lambda", lambda)?;
    positive("omega", omega)?;
    count("steps", steps, 1)?;
    let form = if stabilized {
        PenaltyForm::Stabilized
    } else {
        PenaltyForm::Original
    };
    Ok(explosion_demo(alpha, lambda, omega, steps, form)?.distances)
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    positive("lo", lo)?;
    positive("hi", hi)?;
    count("n", n, 2)?;
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Fraction of the distance to the anchor removed per step by the
/// stabilized penalty, for each Ω in `omegas`. The original penalty
/// removes `αλΩ`, which overshoots past 1 and diverges past 2.
pub fn stabilization_curve(alpha: f64, lambda: f64, omegas: &[f64]) -> Result<Vec<f64>> {
    positive("alpha", alpha)?;
    positive("lambda", lambda)?;
    omegas
        .iter()
        .map(|&o| {
            if o >= 0.0 && o.is_finite() {
                Ok(stabilization_factor(alpha, lambda, o))
            } else {
                Err(DemoError::Invalid {
                    name: "omega",
                    expected: "finite and ≥ 0",
                    value: o,
                })
            }
        })
        .collect()
}

/// Clips the two-component gradient `[large, small]` to `max_norm` and
/// returns the clipped pair.
pub fn clip_swamping(large: f64, small: f64, max_norm: f64) -> Result<[f64; 2]> {
    positive("max_norm", max_norm)?;
    for (name, v) in [("large", large), ("small", small)] {
        if !v.is_finite() {
            return Err(DemoError::Invalid {
                name,
                expected: "finite",
                value: v,
            });
        }
    }
    let g = clip_global_norm(&GradientVector::from(vec![large, small]), max_norm);
    Ok([g.as_slice()[0], g.as_slice()[1]])
}
