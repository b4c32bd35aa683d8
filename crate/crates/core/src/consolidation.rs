//! Quadratic consolidation penalty anchoring weights to a snapshot.
//!
//! Original form: `(λ/2) Σ Ω_i (w_i − w*_i)²`.
//!
//! Stabilized form: `(λ/2) Σ Ω_i / (αλΩ_i + 1) · (w_i − w*_i)²`. Under plain
//! SGD with step α the regularizer moves a weight by
//! `αλΩ/(αλΩ+1) · (w − w*)`, a factor that stays below 1 however large Ω
//! gets, so the weight can never overshoot its anchor. With the original form
//! the factor is `αλΩ`; once it reaches 2 the distance to the anchor grows
//! geometrically by `αλΩ − 1` per step.
//!
//! α is the optimizer's nominal learning rate. For Adam this is only an
//! approximation of the effective step size.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::importance::{ImportanceMap, ImportanceMethod};
use crate::nn::{GradientVector, LayerSpec, Network, Optimizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyForm {
    Original,
    Stabilized,
}

impl PenaltyForm {
    pub fn as_str(self) -> &'static str {
        match self {
            PenaltyForm::Original => "original",
            PenaltyForm::Stabilized => "stabilized",
        }
    }
}

/// `αλΩ / (αλΩ + 1)`: fraction of the distance to the anchor removed per
/// plain-SGD step by the stabilized penalty.
pub fn stabilization_factor(alpha: f64, lambda: f64, omega: f64) -> f64 {
    let s = alpha * lambda * omega;
    s / (s + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidatedState {
    w_star: Vec<f64>,
    omega: ImportanceMap,
    lambda: f64,
    alpha: f64,
    form: PenaltyForm,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateHeader {
    lambda: f64,
    alpha: f64,
    stabilized: bool,
    network_fingerprint: String,
}

impl ConsolidatedState {
    pub fn new(w_star: Vec<f64>, omega: ImportanceMap, lambda: f64, alpha: f64, form: PenaltyForm) -> Result<Self> {
        if w_star.len() != omega.len() {
            return Err(Error::Alignment {
                what: "importance map",
                expected: w_star.len(),
                actual: omega.len(),
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and ≥ 0, got {lambda}")));
        }
        if form == PenaltyForm::Stabilized && !(alpha > 0.0) {
            return Err(Error::Config(format!(
                "stabilized penalty needs a positive learning rate, got {alpha}"
            )));
        }
        Ok(Self {
            w_star,
            omega,
            lambda,
            alpha,
            form,
        })
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn omega(&self) -> &ImportanceMap {
        &self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn form(&self) -> PenaltyForm {
        self.form
    }

    /// Importance as seen by the penalty: Ω, or Ω/(αλΩ+1) when stabilized.
    pub fn effective_importance(&self, omega: f64) -> f64 {
        match self.form {
            PenaltyForm::Original => omega,
            PenaltyForm::Stabilized => omega / (self.alpha * self.lambda * omega + 1.0),
        }
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.w_star.len() {
            return Err(Error::Alignment {
                what: "parameters",
                expected: self.w_star.len(),
                actual: w.len(),
            });
        }
        Ok(())
    }

    pub fn penalty_value(&self, w: &[f64]) -> Result<f64> {
        self.check(w)?;
        let sum: f64 = w
            .iter()
            .zip(&self.w_star)
            .zip(self.omega.omega())
            .map(|((w, ws), &o)| self.effective_importance(o) * (w - ws).powi(2))
            .sum();
        Ok(0.5 * self.lambda * sum)
    }

    pub fn penalty_gradient(&self, w: &[f64]) -> Result<GradientVector> {
        let mut g = GradientVector::zeros(w.len());
        self.add_penalty_gradient(w, g.as_mut_slice())?;
        Ok(g)
    }

    /// Adds `λ·Ω_eff·(w − w*)` to `grad`.
    pub fn add_penalty_gradient(&self, w: &[f64], grad: &mut [f64]) -> Result<()> {
        self.check(w)?;
        if grad.len() != w.len() {
            return Err(Error::Alignment {
                what: "gradient",
                expected: w.len(),
                actual: grad.len(),
            });
        }
        for (((g, w), ws), &o) in grad.iter_mut().zip(w).zip(&self.w_star).zip(self.omega.omega()) {
            *g += self.lambda * self.effective_importance(o) * (w - ws);
        }
        Ok(())
    }

    /// Writes `w_star.bin`, `omega.bin`, `omega.json` and `state.json` into `dir`.
    pub fn save(&self, dir: &Path, network_fingerprint: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let w_path = dir.join("w_star.bin");
        let bytes: Vec<u8> = self.w_star.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&w_path, bytes).map_err(|e| Error::io(&w_path, e))?;
        self.omega
            .save(&dir.join("omega.bin"), &dir.join("omega.json"), network_fingerprint)?;
        let header = StateHeader {
            lambda: self.lambda,
            alpha: self.alpha,
            stabilized: self.form == PenaltyForm::Stabilized,
            network_fingerprint: network_fingerprint.to_string(),
        };
        let h_path = dir.join("state.json");
        fs::write(&h_path, serde_json::to_string_pretty(&header)?).map_err(|e| Error::io(&h_path, e))
    }

    /// Reads a state saved by [`save`](Self::save), returning it with the
    /// stored network fingerprint.
    pub fn load(dir: &Path) -> Result<(Self, String)> {
        let h_path = dir.join("state.json");
        let header: StateHeader = serde_json::from_slice(&fs::read(&h_path).map_err(|e| Error::io(&h_path, e))?)?;
        let w_path = dir.join("w_star.bin");
        let bytes = fs::read(&w_path).map_err(|e| Error::io(&w_path, e))?;
        let w_star = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (omega, _) = ImportanceMap::load(&dir.join("omega.bin"), &dir.join("omega.json"))?;
        let form = if header.stabilized {
            PenaltyForm::Stabilized
        } else {
            PenaltyForm::Original
        };
        Ok((
            ConsolidatedState::new(w_star, omega, header.lambda, header.alpha, form)?,
            header.network_fingerprint,
        ))
    }
}

/// Snapshots the current parameters as the new anchor.
pub fn consolidate(
    net: &Network,
    omega: ImportanceMap,
    lambda: f64,
    alpha: f64,
    form: PenaltyForm,
) -> Result<ConsolidatedState> {
    ConsolidatedState::new(net.params().to_vec(), omega, lambda, alpha, form)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplosionTrajectory {
    /// `|w − w*|` before the first step and after every step.
    pub distances: Vec<f64>,
    /// Set when a step overflowed; `distances` stops at the last finite value.
    pub diverged: bool,
}

/// Single weight, zero task loss, plain SGD with step `alpha`, starting at
/// distance 1 from its anchor.
pub fn explosion_demo(
    alpha: f64,
    lambda: f64,
    omega: f64,
    n_steps: usize,
    form: PenaltyForm,
) -> Result<ExplosionTrajectory> {
    let mut net = Network::new(vec![1], vec![LayerSpec::Dense { inputs: 1, outputs: 1 }])?;
    let anchor = net.params().to_vec();
    let map = ImportanceMap::new(ImportanceMethod::Mas, vec![omega, 0.0], 0)?;
    let state = consolidate(&net, map, lambda, alpha, form)?;
    net.params_mut()[0] = anchor[0] + 1.0;
    let mut opt = Optimizer::sgd(alpha);
    let mut distances = vec![1.0];
    for _ in 0..n_steps {
        let grad = state.penalty_gradient(net.params())?;
        match opt.step(&mut net, &grad) {
            Ok(()) => {}
            Err(Error::NonFiniteParameter { .. }) => {
                return Ok(ExplosionTrajectory {
                    distances,
                    diverged: true,
                })
            }
            Err(e) => return Err(e),
        }
        let d = (net.params()[0] - anchor[0]).abs();
        if !d.is_finite() {
            return Ok(ExplosionTrajectory {
                distances,
                diverged: true,
            });
        }
        distances.push(d);
    }
    Ok(ExplosionTrajectory {
        distances,
        diverged: false,
    })
}
