use serde::{Deserialize, Serialize};

use super::sequential::{build_network, evaluate, task_importance, train_task, TrainSettings};
use super::{derive_seed, ClipScope, Corpora, SeedStream};
use crate::data::{Corpus, NetworkKind, TaskSpec, TaskView, Transform};
use crate::error::{Error, Result};
use crate::importance::{ImportanceMethod, SiAccumulator, SI_DAMPING};
use crate::nn::{AdamConfig, Network, Optimizer};
use crate::stats::mean_ci;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneCriterion {
    Magnitude,
    Fisher,
    Mas,
    Si,
    TotalAbsSignal,
}

impl PruneCriterion {
    pub const ALL: [PruneCriterion; 5] = [
        PruneCriterion::Magnitude,
        PruneCriterion::Fisher,
        PruneCriterion::Mas,
        PruneCriterion::Si,
        PruneCriterion::TotalAbsSignal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PruneCriterion::Magnitude => "magnitude",
            PruneCriterion::Fisher => "fisher",
            PruneCriterion::Mas => "mas",
            PruneCriterion::Si => "si",
            PruneCriterion::TotalAbsSignal => "total_abs_signal",
        }
    }

    fn importance_method(self) -> Option<ImportanceMethod> {
        match self {
            PruneCriterion::Magnitude => None,
            PruneCriterion::Fisher => Some(ImportanceMethod::FisherLabel),
            PruneCriterion::Mas => Some(ImportanceMethod::Mas),
            PruneCriterion::Si => Some(ImportanceMethod::Si),
            PruneCriterion::TotalAbsSignal => Some(ImportanceMethod::TotalAbsSignal),
        }
    }
}

impl std::fmt::Display for PruneCriterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PruneCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PruneCriterion::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .or(match s {
                "tas" => Some(PruneCriterion::TotalAbsSignal),
                _ => None,
            })
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown prune criterion {s:?} (magnitude, fisher, mas, si, total_abs_signal)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneScope {
    /// One threshold across all layers.
    #[default]
    Global,
    /// The same fraction removed from every layer separately.
    PerLayer,
}

/// Indices of the weights to zero: the `round(fraction · n)` weights with the
/// smallest score, ties broken by lower index. Biases are never selected.
pub fn prune_mask(net: &Network, scores: &[f64], fraction: f64, scope: PruneScope) -> Result<Vec<usize>> {
    if scores.len() != net.num_params() {
        return Err(Error::Alignment {
            what: "prune scores",
            expected: net.num_params(),
            actual: scores.len(),
        });
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("prune fraction {fraction} outside [0, 1]")));
    }
    let groups: Vec<Vec<usize>> = match scope {
        PruneScope::Global => vec![net
            .weight_mask()
            .iter()
            .enumerate()
            .filter_map(|(i, &w)| w.then_some(i))
            .collect()],
        PruneScope::PerLayer => net
            .param_index()
            .iter()
            .flatten()
            .map(|slot| slot.weights().collect())
            .collect(),
    };
    let mut out = Vec::new();
    for mut group in groups {
        let k = (fraction * group.len() as f64).round() as usize;
        group.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        out.extend_from_slice(&group[..k.min(group.len())]);
    }
    out.sort_unstable();
    Ok(out)
}

/// Accuracy on `view` after zeroing each fraction of weights in turn. The
/// network is left untouched.
pub fn prune_and_eval(
    net: &Network,
    scores: &[f64],
    fractions: &[f64],
    view: &TaskView<'_>,
    scope: PruneScope,
) -> Result<Vec<f64>> {
    let mut pruned = net.clone();
    fractions
        .iter()
        .map(|&p| {
            let mask = prune_mask(net, scores, p, scope)?;
            pruned.set_params(net.params())?;
            let params = pruned.params_mut();
            for i in mask {
                params[i] = 0.0;
            }
            evaluate(&pruned, view)
        })
        .collect()
}

/// Pruning experiment: a dense net trained on plain MNIST per seed, pruned by
/// each criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PruneConfig {
    pub seed: u64,
    pub n_seeds: usize,
    pub fractions: Vec<f64>,
    pub criteria: Vec<PruneCriterion>,
    pub scope: PruneScope,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub importance_samples: Option<usize>,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub si_damping: f64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_seeds: 10,
            fractions: vec![0.0, 0.2, 0.4, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0],
            criteria: PruneCriterion::ALL.to_vec(),
            scope: PruneScope::Global,
            hidden: vec![300, 150],
            epochs: 6,
            batch_size: 100,
            adam: AdamConfig::default(),
            importance_samples: None,
            train_limit: None,
            test_limit: None,
            si_damping: SI_DAMPING,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_seeds == 0 {
            return bad("n_seeds must be ≥ 1".into());
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be ≥ 1".into());
        }
        if self.fractions.is_empty() || self.criteria.is_empty() {
            return bad("fractions and criteria must be non-empty".into());
        }
        if let Some(p) = self.fractions.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("prune fraction {p} outside [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrunePoint {
    pub fraction: f64,
    pub mean_accuracy: f64,
    /// 0.95 half-width; `None` with a single seed.
    pub ci_halfwidth: Option<f64>,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneCurve {
    pub criterion: PruneCriterion,
    pub points: Vec<PrunePoint>,
}

impl PruneCurve {
    pub fn at(&self, fraction: f64) -> Option<&PrunePoint> {
        self.points.iter().find(|p| p.fraction == fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PruneReport {
    pub curves: Vec<PruneCurve>,
    /// Unpruned test accuracy per seed.
    pub unpruned_accuracy: Vec<f64>,
    /// `[seed][criterion][fraction]` raw accuracies.
    pub raw: Vec<Vec<Vec<f64>>>,
    pub wall_time_secs: f64,
}

fn prune_one_seed(cfg: &PruneConfig, seed: u64, corpora: &Corpora) -> Result<(f64, Vec<Vec<f64>>)> {
    let task = TaskSpec {
        source: Corpus::Mnist,
        transform: Transform::Identity,
        task_id: 0,
    };
    let data = super::sequential::task_data(corpora, &task, cfg.train_limit, cfg.test_limit)?;
    let train = TaskView::new(&data.train, &task);
    let test = TaskView::new(&data.test, &task);
    let mut net = build_network(NetworkKind::Dense, &cfg.hidden, data.train.image_len())?;
    net.seeded_init(derive_seed(seed, SeedStream::Init, 0, 0));

    let mut si = if cfg.criteria.contains(&PruneCriterion::Si) {
        Some(SiAccumulator::new(cfg.si_damping)?)
    } else {
        None
    };
    let settings = TrainSettings {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed,
        clip_norm: None,
        clip_scope: ClipScope::Combined,
    };
    let mut opt = Optimizer::adam(cfg.adam);
    train_task(&mut net, &train, &mut opt, &settings, 0, None, si.as_mut())?;
    let unpruned = evaluate(&net, &test)?;

    let fisher_seed = derive_seed(seed, SeedStream::Fisher, 0, 0);
    let mut rows = Vec::with_capacity(cfg.criteria.len());
    for &criterion in &cfg.criteria {
        let scores = match criterion.importance_method() {
            None => net.params().iter().map(|w| w.abs()).collect(),
            Some(method) => task_importance(method, &net, &train, cfg.importance_samples, fisher_seed, si.as_mut())?
                .omega()
                .to_vec(),
        };
        rows.push(prune_and_eval(&net, &scores, &cfg.fractions, &test, cfg.scope)?);
    }
    Ok((unpruned, rows))
}

/// Runs the pruning protocol over seeds `seed..seed + n_seeds` and averages
/// the curves per criterion.
pub fn run_prune_experiment(cfg: &PruneConfig, corpora: &Corpora, jobs: usize) -> Result<PruneReport> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let per_seed: Vec<(f64, Vec<Vec<f64>>)> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| {
                seeds
                    .par_iter()
                    .map(|&s| prune_one_seed(cfg, s, corpora))
                    .collect::<Result<_>>()
            })?
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = jobs;
            seeds
                .iter()
                .map(|&s| prune_one_seed(cfg, s, corpora))
                .collect::<Result<_>>()?
        }
    };

    let mut curves = Vec::with_capacity(cfg.criteria.len());
    for (c, &criterion) in cfg.criteria.iter().enumerate() {
        let mut points = Vec::with_capacity(cfg.fractions.len());
        for (f, &fraction) in cfg.fractions.iter().enumerate() {
            let acc: Vec<f64> = per_seed.iter().map(|(_, rows)| rows[c][f]).collect();
            let (mean_accuracy, ci_halfwidth) = if acc.len() >= 2 {
                let (m, h) = mean_ci(&acc, 0.95)?;
                (m, Some(h))
            } else {
                (acc[0], None)
            };
            points.push(PrunePoint {
                fraction,
                mean_accuracy,
                ci_halfwidth,
                n_runs: acc.len(),
            });
        }
        curves.push(PruneCurve { criterion, points });
    }
    let (unpruned_accuracy, raw) = per_seed.into_iter().unzip();
    Ok(PruneReport {
        curves,
        unpruned_accuracy,
        raw,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_picks_smallest_with_index_ties() {
        let net = Network::dense(&[2, 2]).unwrap();
        // four weights then two biases
        let scores = [0.5, 0.1, 0.1, 0.9, 0.0, 0.0];
        assert_eq!(prune_mask(&net, &scores, 0.5, PruneScope::Global).unwrap(), vec![1, 2]);
        assert_eq!(
            prune_mask(&net, &scores, 0.0, PruneScope::Global).unwrap(),
            Vec::<usize>::new()
        );
        assert_eq!(
            prune_mask(&net, &scores, 1.0, PruneScope::Global).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert!(prune_mask(&net, &scores, 1.5, PruneScope::Global).is_err());
    }

    #[test]
    fn per_layer_scope_prunes_every_layer() {
        let net = Network::dense(&[2, 2, 2]).unwrap();
        // layer 0 weights 0..4, biases 4..6; layer 2 weights 6..10, biases 10..12
        let mut scores = vec![1.0; 12];
        scores[6..10].copy_from_slice(&[9.0, 8.0, 7.0, 6.0]);
        let global = prune_mask(&net, &scores, 0.5, PruneScope::Global).unwrap();
        assert_eq!(global, vec![0, 1, 2, 3]);
        let per_layer = prune_mask(&net, &scores, 0.5, PruneScope::PerLayer).unwrap();
        assert_eq!(per_layer, vec![0, 1, 8, 9]);
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in PruneCriterion::ALL {
            assert_eq!(c.as_str().parse::<PruneCriterion>().unwrap(), c);
        }
        assert_eq!("tas".parse::<PruneCriterion>().unwrap(), PruneCriterion::TotalAbsSignal);
        assert!("random".parse::<PruneCriterion>().is_err());
    }
}
