use std::borrow::Cow;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derive_seed, ClipScope, Corpora, PenaltyMode, RunConfig, SeedStream};
use crate::consolidation::{consolidate, ConsolidatedState};
use crate::data::{Dataset, NetworkKind, TaskSpec, TaskView};
use crate::error::{Error, Result};
use crate::importance::{
    accumulate, fisher_importance, layer_spread, mas_importance, total_abs_signal_importance, ImportanceMap,
    ImportanceMethod, SiAccumulator,
};
use crate::nn::{clip_global_norm, GradientVector, LossKind, Network, Optimizer};

const EVAL_CHUNK: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Training produced a non-finite value; the run is excluded from aggregates.
    Failed {
        reason: String,
    },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Failed { .. } => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub method: ImportanceMethod,
    pub penalty: PenaltyMode,
    pub lambda: f64,
    pub seed: u64,
    pub status: RunStatus,
    /// Test accuracy of every task, measured after the whole sequence.
    pub per_task_accuracy: Vec<f64>,
    /// Mean of `per_task_accuracy`; `None` for failed runs.
    pub average_accuracy: Option<f64>,
    pub wall_time_secs: f64,
    /// With `record_checkpoints`: row `k` holds accuracy on tasks `0..=k`
    /// right after training task `k`.
    pub checkpoints: Vec<Vec<f64>>,
    /// Per task: `(layer, max/mean)` of the task's own importance map.
    pub importance_spread: Vec<Vec<(usize, f64)>>,
    /// FNV-1a hash of the final parameter bits; empty for failed runs.
    pub params_digest: String,
}

/// FNV-1a over the bit patterns of `params`, as 16 hex digits.
pub fn params_digest(params: &[f64]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in params.iter().flat_map(|v| v.to_bits().to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Builds the network a task sequence trains: the dense net for permuted
/// sequences, the two-conv net for rotation sequences.
pub fn build_network(kind: NetworkKind, hidden: &[usize], image_len: usize) -> Result<Network> {
    match kind {
        NetworkKind::Dense => {
            let mut sizes = vec![image_len];
            sizes.extend_from_slice(hidden);
            sizes.push(10);
            Network::dense(&sizes)
        }
        NetworkKind::Conv => Ok(Network::conv_mnist()),
    }
}

/// Fraction of correctly classified samples.
pub fn evaluate(net: &Network, view: &TaskView<'_>) -> Result<f64> {
    let mut correct = 0usize;
    let indices: Vec<usize> = (0..view.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let (x, y) = view.gather(chunk, net.input_shape())?;
        let pred = net.predict(&x)?;
        correct += pred.iter().zip(&y).filter(|(p, y)| p == y).count();
    }
    Ok(correct as f64 / view.len().max(1) as f64)
}

pub(super) struct TaskData<'a> {
    pub train: Cow<'a, Dataset>,
    pub test: Cow<'a, Dataset>,
}

pub(super) fn task_data<'a>(
    corpora: &'a Corpora,
    task: &TaskSpec,
    train_limit: Option<usize>,
    test_limit: Option<usize>,
) -> Result<TaskData<'a>> {
    let data = corpora.get(task.source)?;
    let limit = |d: &'a Dataset, n: Option<usize>| match n {
        Some(n) if n < d.len() => Cow::Owned(d.truncated(n)),
        _ => Cow::Borrowed(d),
    };
    Ok(TaskData {
        train: limit(&data.train, train_limit),
        test: limit(&data.test, test_limit),
    })
}

/// Optimizer settings shared by sequential and pruning runs.
pub(super) struct TrainSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: Option<f64>,
    pub clip_scope: ClipScope,
}

impl TrainSettings {
    pub fn from_config(cfg: &RunConfig) -> Self {
        Self {
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            seed: cfg.seed,
            clip_norm: cfg.clip_norm,
            clip_scope: cfg.clip_scope,
        }
    }
}

/// Trains one task with a fresh optimizer. The penalty gradient, when a
/// state is given, joins the task gradient before the step; SI sees only the
/// task gradient and the realized parameter change.
pub(super) fn train_task(
    net: &mut Network,
    view: &TaskView<'_>,
    opt: &mut Optimizer,
    settings: &TrainSettings,
    task_index: usize,
    penalty: Option<&ConsolidatedState>,
    mut si: Option<&mut SiAccumulator>,
) -> Result<()> {
    if let Some(si) = si.as_deref_mut() {
        si.begin_task(net);
    }
    let input_shape = net.input_shape().to_vec();
    let mut before = Vec::new();
    let mut batch_counter = 0usize;
    for epoch in 0..settings.epochs {
        let shuffle = derive_seed(settings.seed, SeedStream::Shuffle, task_index as u64, epoch as u64);
        for (x, y) in view.batches(settings.batch_size, Some(shuffle), &input_shape) {
            let (_, task_grad) = net.backward(&x, &y, LossKind::CrossEntropy).map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { batch: batch_counter },
                other => other,
            })?;
            let grad = combine(net, &task_grad, penalty, settings)?;
            if si.is_some() {
                before.clear();
                before.extend_from_slice(net.params());
            }
            opt.step(net, &grad)?;
            if let Some(si) = si.as_deref_mut() {
                let delta: Vec<f64> = net.params().iter().zip(&before).map(|(a, b)| a - b).collect();
                si.record_step(task_grad.as_slice(), &delta)?;
            }
            batch_counter += 1;
        }
    }
    Ok(())
}

fn combine(
    net: &Network,
    task_grad: &GradientVector,
    penalty: Option<&ConsolidatedState>,
    settings: &TrainSettings,
) -> Result<GradientVector> {
    let add_penalty = |g: &mut GradientVector| -> Result<()> {
        if let Some(state) = penalty {
            state.add_penalty_gradient(net.params(), g.as_mut_slice())?;
        }
        Ok(())
    };
    let mut grad = task_grad.clone();
    match (settings.clip_norm, settings.clip_scope) {
        (None, _) => add_penalty(&mut grad)?,
        (Some(c), ClipScope::Combined) => {
            add_penalty(&mut grad)?;
            grad = clip_global_norm(&grad, c);
        }
        (Some(c), ClipScope::TaskOnly) => {
            grad = clip_global_norm(&grad, c);
            add_penalty(&mut grad)?;
        }
    }
    Ok(grad)
}

/// Importance of the just-trained task on its train split. SI maps come from
/// the accumulator filled during training.
pub(super) fn task_importance(
    method: ImportanceMethod,
    net: &Network,
    view: &TaskView<'_>,
    n_samples: Option<usize>,
    fisher_seed: u64,
    si: Option<&mut SiAccumulator>,
) -> Result<ImportanceMap> {
    let n = n_samples.unwrap_or(view.len()).min(view.len());
    match method {
        ImportanceMethod::Si => si
            .ok_or_else(|| Error::Usage("SI importance needs an accumulator".into()))?
            .finish_task(net),
        ImportanceMethod::Mas => mas_importance(net, view, n),
        ImportanceMethod::TotalAbsSignal => total_abs_signal_importance(net, view, n),
        fisher => {
            let mode = fisher.fisher_mode().expect("remaining methods are Fisher variants");
            let mut rng = ChaCha8Rng::seed_from_u64(fisher_seed);
            fisher_importance(net, view, mode, n, &mut rng)
        }
    }
}

fn is_divergence(e: &Error) -> bool {
    matches!(
        e,
        Error::NonFiniteLoss { .. } | Error::NonFiniteGradient { .. } | Error::NonFiniteParameter { .. }
    )
}

/// Trains the configured task sequence with consolidation and measures test
/// accuracy on every task afterwards. Divergence yields a failed result, not
/// an error. With `checkpoint_dir`, the consolidated state after each task is
/// written to `<dir>/task-<k>/`.
pub fn run_sequential(cfg: &RunConfig, corpora: &Corpora, checkpoint_dir: Option<&Path>) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut result = RunResult {
        method: cfg.method,
        penalty: cfg.penalty,
        lambda: cfg.lambda,
        seed: cfg.seed,
        status: RunStatus::Completed,
        per_task_accuracy: Vec::new(),
        average_accuracy: None,
        wall_time_secs: 0.0,
        checkpoints: Vec::new(),
        importance_spread: Vec::new(),
        params_digest: String::new(),
    };
    match sequence_inner(cfg, corpora, checkpoint_dir, &mut result) {
        Ok(()) => {}
        Err(e) if is_divergence(&e) => {
            result.status = RunStatus::Failed { reason: e.to_string() };
            result.per_task_accuracy.clear();
        }
        Err(e) => return Err(e),
    }
    if result.status.is_completed() {
        let acc = &result.per_task_accuracy;
        result.average_accuracy = Some(acc.iter().sum::<f64>() / acc.len() as f64);
    }
    result.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(result)
}

fn sequence_inner(
    cfg: &RunConfig,
    corpora: &Corpora,
    checkpoint_dir: Option<&Path>,
    result: &mut RunResult,
) -> Result<()> {
    let sequence = cfg.task_sequence()?;
    let data = sequence
        .tasks
        .iter()
        .map(|t| task_data(corpora, t, cfg.train_limit, cfg.test_limit))
        .collect::<Result<Vec<_>>>()?;
    let views: Vec<(TaskView<'_>, TaskView<'_>)> = sequence
        .tasks
        .iter()
        .zip(&data)
        .map(|(t, d)| (TaskView::new(&d.train, t), TaskView::new(&d.test, t)))
        .collect();

    let image_len = data[0].train.image_len();
    let mut net = build_network(sequence.network_kind, &cfg.hidden, image_len)?;
    net.seeded_init(derive_seed(cfg.seed, SeedStream::Init, 0, 0));

    // A zero λ leaves the loss untouched, so neither penalty nor importance is computed.
    let form = cfg.penalty.form().filter(|_| cfg.lambda > 0.0);
    let mut si = match (form, cfg.method) {
        (Some(_), ImportanceMethod::Si) => Some(SiAccumulator::new(cfg.si_damping)?),
        _ => None,
    };
    let mut omega = ImportanceMap::zeros(cfg.method, net.num_params());
    let mut state: Option<ConsolidatedState> = None;
    let settings = TrainSettings::from_config(cfg);

    for (k, (train, _)) in views.iter().enumerate() {
        let mut opt = Optimizer::adam(cfg.adam);
        train_task(&mut net, train, &mut opt, &settings, k, state.as_ref(), si.as_mut())?;

        if let Some(form) = form {
            let fisher_seed = derive_seed(cfg.seed, SeedStream::Fisher, k as u64, 0);
            let task_map = task_importance(
                cfg.method,
                &net,
                train,
                cfg.importance_samples,
                fisher_seed,
                si.as_mut(),
            )?;
            result.importance_spread.push(layer_spread(&net, &task_map));
            omega = accumulate(&omega, &task_map)?;
            let s = consolidate(&net, omega.clone(), cfg.lambda, cfg.adam.lr, form)?;
            if let Some(dir) = checkpoint_dir {
                s.save(&dir.join(format!("task-{k}")), &net.fingerprint())?;
            }
            state = Some(s);
        }

        if cfg.record_checkpoints {
            let row = views[..=k]
                .iter()
                .map(|(_, test)| evaluate(&net, test))
                .collect::<Result<Vec<_>>>()?;
            result.checkpoints.push(row);
        }
    }

    result.per_task_accuracy = views
        .iter()
        .map(|(_, test)| evaluate(&net, test))
        .collect::<Result<_>>()?;
    result.params_digest = params_digest(net.params());
    Ok(())
}
