//! Experiment protocols: sequential training with consolidation, λ sweeps
//! with t-intervals, and pruning-degradation curves.
//!
//! Every random choice in a run (initialization, task permutations, batch
//! order, sampled Fisher classes) derives from the run seed through
//! [`derive_seed`], so a run is reproducible bit for bit on one platform.

mod output;
mod prune;
mod sequential;
mod sweep;

pub use output::{
    write_explosion_csv, write_prune_csv, write_runs_csv, write_sweep_csv, EXPLOSION_HEADER, PRUNE_HEADER, RUNS_HEADER,
    SWEEP_HEADER,
};
pub use prune::{
    prune_and_eval, prune_mask, run_prune_experiment, PruneConfig, PruneCriterion, PruneCurve, PrunePoint, PruneReport,
    PruneScope,
};
pub use sequential::{build_network, evaluate, params_digest, run_sequential, RunResult, RunStatus};
pub use sweep::{run_many, sweep_lambda, SweepPoint, SweepResult};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::consolidation::PenaltyForm;
use crate::data::{load_corpus, Corpus, CorpusData, TaskSequence};
use crate::error::{Error, Result};
use crate::importance::{ImportanceMethod, SI_DAMPING};
use crate::nn::AdamConfig;

/// Which consolidation penalty a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    None,
    Original,
    Stabilized,
}

impl PenaltyMode {
    pub fn form(self) -> Option<PenaltyForm> {
        match self {
            PenaltyMode::None => None,
            PenaltyMode::Original => Some(PenaltyForm::Original),
            PenaltyMode::Stabilized => Some(PenaltyForm::Stabilized),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PenaltyMode::None => "none",
            PenaltyMode::Original => "original",
            PenaltyMode::Stabilized => "stabilized",
        }
    }
}

impl std::str::FromStr for PenaltyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PenaltyMode::None),
            "original" | "ewc" => Ok(PenaltyMode::Original),
            "stabilized" => Ok(PenaltyMode::Stabilized),
            other => Err(Error::Config(format!(
                "unknown penalty {other:?} (none, original, stabilized)"
            ))),
        }
    }
}

/// Whether clipping sees the penalty gradient too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipScope {
    /// Clip task gradient plus penalty gradient.
    #[default]
    Combined,
    /// Clip the task gradient, then add the penalty gradient.
    TaskOnly,
}

/// One sequential-training run. Defaults: Adam(0.001, 0.9, 0.999, 1e-8),
/// 6 epochs per task, batch 100, ten permuted-MNIST tasks on a 784-300-150-10
/// dense net, full train split for importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `permuted-mnist-<n>` or `rotated-mnist-fashion-4`.
    pub sequence: String,
    /// Make task 1 of a permuted sequence plain MNIST.
    pub first_task_identity: bool,
    /// Hidden widths of the dense network (ignored by the conv sequence).
    pub hidden: Vec<usize>,
    pub method: ImportanceMethod,
    pub penalty: PenaltyMode,
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Samples per task for Fisher/MAS/total-signal importance; `None` uses
    /// the whole train split.
    pub importance_samples: Option<usize>,
    /// Use only the first `n` training images of every corpus.
    pub train_limit: Option<usize>,
    /// Use only the first `n` test images of every corpus.
    pub test_limit: Option<usize>,
    pub si_damping: f64,
    pub clip_norm: Option<f64>,
    pub clip_scope: ClipScope,
    /// Also record accuracy on all seen tasks after every task.
    pub record_checkpoints: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sequence: "permuted-mnist-10".into(),
            first_task_identity: false,
            hidden: vec![300, 150],
            method: ImportanceMethod::Mas,
            penalty: PenaltyMode::Stabilized,
            lambda: 8.5,
            epochs: 6,
            batch_size: 100,
            adam: AdamConfig::default(),
            seed: 0,
            importance_samples: None,
            train_limit: None,
            test_limit: None,
            si_damping: SI_DAMPING,
            clip_norm: None,
            clip_scope: ClipScope::Combined,
            record_checkpoints: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.epochs == 0 {
            return bad("epochs must be ≥ 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be ≥ 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and ≥ 0, got {}", self.lambda));
        }
        if !(self.adam.lr > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.adam.lr));
        }
        if !(self.si_damping > 0.0) {
            return bad(format!("si_damping must be positive, got {}", self.si_damping));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad(format!("clip_norm must be positive, got {c}"));
            }
        }
        for (name, v) in [
            ("importance_samples", self.importance_samples),
            ("train_limit", self.train_limit),
            ("test_limit", self.test_limit),
        ] {
            if v == Some(0) {
                return bad(format!("{name} must be ≥ 1"));
            }
        }
        self.task_sequence().map(|_| ())
    }

    /// Task sequence of this run; permutations derive from the run seed.
    pub fn task_sequence(&self) -> Result<TaskSequence> {
        TaskSequence::from_key(
            &self.sequence,
            derive_seed(self.seed, SeedStream::Tasks, 0, 0),
            self.first_task_identity,
        )
    }
}

/// Loaded corpora, shared read-only between runs.
#[derive(Debug, Clone, Default)]
pub struct Corpora {
    data: BTreeMap<Corpus, CorpusData>,
}

impl Corpora {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, corpus: Corpus, data: CorpusData) {
        self.data.insert(corpus, data);
    }

    pub fn get(&self, corpus: Corpus) -> Result<&CorpusData> {
        self.data
            .get(&corpus)
            .ok_or_else(|| Error::Config(format!("corpus {} is not loaded", corpus.dir_name())))
    }

    /// Loads every corpus the given sequences need from `root`.
    pub fn load(root: &Path, corpora: &[Corpus]) -> Result<Self> {
        let mut out = Corpora::new();
        for &c in corpora {
            if !out.data.contains_key(&c) {
                out.insert(c, load_corpus(root, c)?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum SeedStream {
    Init = 1,
    Tasks = 2,
    Shuffle = 3,
    Fisher = 4,
}

/// SplitMix64 mixing of a base seed with a stream tag and two indices.
pub(crate) fn derive_seed(base: u64, stream: SeedStream, a: u64, b: u64) -> u64 {
    let mut z = base
        ^ (stream as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ a.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ b.wrapping_mul(0x1656_67B1_9E37_79F9);
    for _ in 0..2 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
