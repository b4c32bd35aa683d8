//! Per-weight importance maps.
//!
//! Every estimator returns one non-negative value per network parameter,
//! aligned with [`Network::params`]. Sample-averaged estimators (Fisher,
//! MAS, total absolute signal) walk the data in fixed-size chunks in index
//! order, so results do not depend on thread count or batch layout.
//!
//! The total-absolute-signal estimator is a reconstruction: the importance of
//! a connection is the mean magnitude of the signal it carries, `|a_j · w_ij|`
//! averaged over samples (summed over positions for conv kernels), and `|b|`
//! for a bias.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::TaskView;
use crate::error::{Error, Result};
use crate::nn::{softmax_row, LayerSpec, Network, Reduction};
use crate::tensor::Tensor;

const CHUNK: usize = 100;

/// Default SI damping.
pub const SI_DAMPING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    FisherLabel,
    FisherArgmax,
    FisherSampled,
    Mas,
    Si,
    TotalAbsSignal,
}

impl ImportanceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ImportanceMethod::FisherLabel => "fisher_label",
            ImportanceMethod::FisherArgmax => "fisher_argmax",
            ImportanceMethod::FisherSampled => "fisher_sampled",
            ImportanceMethod::Mas => "mas",
            ImportanceMethod::Si => "si",
            ImportanceMethod::TotalAbsSignal => "total_abs_signal",
        }
    }

    pub fn fisher_mode(self) -> Option<FisherMode> {
        match self {
            ImportanceMethod::FisherLabel => Some(FisherMode::Label),
            ImportanceMethod::FisherArgmax => Some(FisherMode::Argmax),
            ImportanceMethod::FisherSampled => Some(FisherMode::Sampled),
            _ => None,
        }
    }
}

impl std::fmt::Display for ImportanceMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ImportanceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fisher" | "fisher_label" | "fisher-label" => ImportanceMethod::FisherLabel,
            "fisher_argmax" | "fisher-argmax" => ImportanceMethod::FisherArgmax,
            "fisher_sampled" | "fisher-sampled" => ImportanceMethod::FisherSampled,
            "mas" => ImportanceMethod::Mas,
            "si" => ImportanceMethod::Si,
            "total_abs_signal" | "total-abs-signal" | "tas" => ImportanceMethod::TotalAbsSignal,
            other => return Err(Error::Config(format!("unknown importance method {other:?}"))),
        })
    }
}

/// Which output class the Fisher log-likelihood is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherMode {
    /// The dataset label.
    Label,
    /// The most probable class.
    Argmax,
    /// A class drawn from the predicted distribution.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMap {
    omega: Vec<f64>,
    method: ImportanceMethod,
    n_samples_used: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    method: ImportanceMethod,
    n_samples: usize,
    len: usize,
    network_fingerprint: String,
}

impl ImportanceMap {
    pub fn new(method: ImportanceMethod, omega: Vec<f64>, n_samples_used: usize) -> Result<Self> {
        if let Some(i) = omega.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!(
                "importance {i} is {} (must be finite and non-negative)",
                omega[i]
            )));
        }
        Ok(Self {
            omega,
            method,
            n_samples_used,
        })
    }

    pub fn zeros(method: ImportanceMethod, len: usize) -> Self {
        Self {
            omega: vec![0.0; len],
            method,
            n_samples_used: 0,
        }
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn method(&self) -> ImportanceMethod {
        self.method
    }

    pub fn n_samples_used(&self) -> usize {
        self.n_samples_used
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Writes the map as raw little-endian f64 plus a JSON sidecar.
    pub fn save(&self, bin: &Path, sidecar: &Path, network_fingerprint: &str) -> Result<()> {
        let bytes: Vec<u8> = self.omega.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(bin, bytes).map_err(|e| Error::io(bin, e))?;
        let meta = Sidecar {
            method: self.method,
            n_samples: self.n_samples_used,
            len: self.omega.len(),
            network_fingerprint: network_fingerprint.to_string(),
        };
        fs::write(sidecar, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(sidecar, e))
    }

    /// Reads a map written by [`save`](Self::save), returning it with the
    /// stored network fingerprint.
    pub fn load(bin: &Path, sidecar: &Path) -> Result<(Self, String)> {
        let meta: Sidecar = serde_json::from_slice(&fs::read(sidecar).map_err(|e| Error::io(sidecar, e))?)?;
        let bytes = fs::read(bin).map_err(|e| Error::io(bin, e))?;
        if bytes.len() != meta.len * 8 {
            return Err(Error::Alignment {
                what: "importance file (bytes / 8)",
                expected: meta.len,
                actual: bytes.len() / 8,
            });
        }
        let omega = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((
            ImportanceMap::new(meta.method, omega, meta.n_samples)?,
            meta.network_fingerprint,
        ))
    }
}

/// Elementwise sum of two maps of the same method; sample counts add up.
pub fn accumulate(prev: &ImportanceMap, new: &ImportanceMap) -> Result<ImportanceMap> {
    if prev.method != new.method {
        return Err(Error::MethodMismatch {
            left: prev.method.to_string(),
            right: new.method.to_string(),
        });
    }
    if prev.len() != new.len() {
        return Err(Error::Alignment {
            what: "importance map",
            expected: prev.len(),
            actual: new.len(),
        });
    }
    Ok(ImportanceMap {
        omega: prev.omega.iter().zip(&new.omega).map(|(a, b)| a + b).collect(),
        method: prev.method,
        n_samples_used: prev.n_samples_used + new.n_samples_used,
    })
}

fn check_samples(view: &TaskView<'_>, n_samples: usize) -> Result<()> {
    if n_samples == 0 || n_samples > view.len() {
        return Err(Error::Usage(format!(
            "importance needs 1..={} samples, got {n_samples}",
            view.len()
        )));
    }
    Ok(())
}

fn chunks(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n)
        .step_by(CHUNK)
        .map(move |start| (start..(start + CHUNK).min(n)).collect())
}

/// Runs `fill` per chunk to produce unscaled per-sample logit gradients and
/// accumulates the reduced per-sample parameter gradients.
fn per_sample_reduced<F>(
    net: &Network,
    view: &TaskView<'_>,
    n_samples: usize,
    reduction: Reduction,
    mut fill: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&Tensor, &[usize], &mut Tensor),
{
    check_samples(view, n_samples)?;
    let mut acc = vec![0.0; net.num_params()];
    for idx in chunks(n_samples) {
        let (x, labels) = view.gather(&idx, net.input_shape())?;
        let trace = net.trace(&x)?;
        let logits = trace.output();
        if let Some(row) = (0..logits.rows()).find(|&r| logits.row(r).iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteGradient { sample: idx[row] });
        }
        let mut dlogits = Tensor::zeros(logits.shape().to_vec());
        fill(logits, &labels, &mut dlogits);
        net.backprop(&trace, dlogits, reduction, &mut acc)?;
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { sample: idx[0] });
        }
    }
    let scale = 1.0 / n_samples as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    Ok(acc)
}

/// Diagonal Fisher: mean over samples of `(∂ log p(y|x) / ∂w)²`.
pub fn fisher_importance<R: Rng>(
    net: &Network,
    view: &TaskView<'_>,
    mode: FisherMode,
    n_samples: usize,
    rng: &mut R,
) -> Result<ImportanceMap> {
    let k = net.num_classes();
    if mode == FisherMode::Label {
        if let Some(position) = (0..n_samples.min(view.len())).find(|&i| view.label(i) >= k) {
            return Err(Error::BadTarget {
                position,
                target: view.label(position),
                classes: k,
            });
        }
    }
    let mut probs = vec![0.0; k];
    let omega = per_sample_reduced(net, view, n_samples, Reduction::SumSquares, |logits, labels, d| {
        for (s, drow) in d.data_mut().chunks_mut(k).enumerate() {
            softmax_row(logits.row(s), &mut probs);
            let y = match mode {
                FisherMode::Label => labels[s],
                FisherMode::Argmax => crate::nn::argmax_row(logits.row(s)),
                FisherMode::Sampled => sample_class(&probs, rng),
            };
            // ∂ log softmax_y / ∂ z = onehot(y) − p
            for (dv, p) in drow.iter_mut().zip(&probs) {
                *dv = -p;
            }
            drow[y] += 1.0;
        }
    })?;
    let method = match mode {
        FisherMode::Label => ImportanceMethod::FisherLabel,
        FisherMode::Argmax => ImportanceMethod::FisherArgmax,
        FisherMode::Sampled => ImportanceMethod::FisherSampled,
    };
    ImportanceMap::new(method, omega, n_samples)
}

fn sample_class<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

/// MAS: mean over samples of `|∂ ‖f(x)‖² / ∂w|` with `f` the pre-softmax
/// output. Labels are never read.
pub fn mas_importance(net: &Network, view: &TaskView<'_>, n_samples: usize) -> Result<ImportanceMap> {
    let omega = per_sample_reduced(net, view, n_samples, Reduction::SumAbs, |logits, _, d| {
        for (dv, z) in d.data_mut().iter_mut().zip(logits.data()) {
            *dv = 2.0 * z;
        }
    })?;
    ImportanceMap::new(ImportanceMethod::Mas, omega, n_samples)
}

/// Total absolute signal through each connection, averaged over samples.
pub fn total_abs_signal_importance(net: &Network, view: &TaskView<'_>, n_samples: usize) -> Result<ImportanceMap> {
    check_samples(view, n_samples)?;
    // Per parameter layer: summed |input| feeding each weight column.
    let mut input_mass: Vec<Option<Vec<f64>>> = net
        .layers()
        .iter()
        .map(|l| match *l {
            LayerSpec::Dense { inputs, .. } => Some(vec![0.0; inputs]),
            LayerSpec::Conv2d { .. } => Some(vec![0.0; l.fan_in()]),
            _ => None,
        })
        .collect();
    for idx in chunks(n_samples) {
        let (x, _) = view.gather(&idx, net.input_shape())?;
        let trace = net.trace(&x)?;
        for (i, mass) in input_mass.iter_mut().enumerate() {
            let Some(mass) = mass else { continue };
            match net.layers()[i] {
                LayerSpec::Dense { inputs, .. } => {
                    for v in trace.layer_input(i).data().chunks(inputs) {
                        mass.iter_mut().zip(v).for_each(|(m, a)| *m += a.abs());
                    }
                }
                _ => {
                    let cols = trace.conv_cols(i).expect("conv layer keeps columns");
                    let width = cols.len() / mass.len();
                    for (m, row) in mass.iter_mut().zip(cols.chunks(width)) {
                        *m += row.iter().map(|a| a.abs()).sum::<f64>();
                    }
                }
            }
        }
        if let Some(sample) = input_mass
            .iter()
            .flatten()
            .any(|m| m.iter().any(|v| !v.is_finite()))
            .then_some(idx[0])
        {
            return Err(Error::NonFiniteGradient { sample });
        }
    }
    let params = net.params();
    let mut omega = vec![0.0; params.len()];
    for (slot, mass) in net.param_index().iter().zip(&input_mass) {
        let (Some(slot), Some(mass)) = (slot, mass) else {
            continue;
        };
        let width = mass.len();
        for (j, (o, w)) in omega[slot.weights()]
            .iter_mut()
            .zip(&params[slot.weights()])
            .enumerate()
        {
            *o = w.abs() * mass[j % width] / n_samples as f64;
        }
        for (o, b) in omega[slot.biases()].iter_mut().zip(&params[slot.biases()]) {
            *o = b.abs();
        }
    }
    ImportanceMap::new(ImportanceMethod::TotalAbsSignal, omega, n_samples)
}

/// Path-integral importance collected while a task trains.
#[derive(Debug, Clone)]
pub struct SiAccumulator {
    xi: f64,
    omega_path: Vec<f64>,
    w_task_start: Option<Vec<f64>>,
    steps: usize,
}

impl SiAccumulator {
    pub fn new(xi: f64) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::Config(format!("SI damping must be positive, got {xi}")));
        }
        Ok(Self {
            xi,
            omega_path: Vec::new(),
            w_task_start: None,
            steps: 0,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn omega_path(&self) -> &[f64] {
        &self.omega_path
    }

    pub fn begin_task(&mut self, net: &Network) {
        self.w_task_start = Some(net.params().to_vec());
        self.omega_path = vec![0.0; net.num_params()];
        self.steps = 0;
    }

    /// `grad_task` is the task-loss gradient only (no penalty term);
    /// `delta_w` is the parameter change the optimizer actually applied.
    pub fn record_step(&mut self, grad_task: &[f64], delta_w: &[f64]) -> Result<()> {
        if self.w_task_start.is_none() {
            return Err(Error::Usage("SI record_step called before begin_task".into()));
        }
        for (what, len) in [("SI gradient", grad_task.len()), ("SI weight change", delta_w.len())] {
            if len != self.omega_path.len() {
                return Err(Error::Alignment {
                    what,
                    expected: self.omega_path.len(),
                    actual: len,
                });
            }
        }
        for ((o, g), d) in self.omega_path.iter_mut().zip(grad_task).zip(delta_w) {
            *o -= g * d;
        }
        self.steps += 1;
        Ok(())
    }

    /// `Ω_i = max(0, path_i) / ((w_end_i − w_start_i)² + ξ)`.
    pub fn finish_task(&mut self, net: &Network) -> Result<ImportanceMap> {
        let start = self
            .w_task_start
            .take()
            .ok_or_else(|| Error::Usage("SI finish_task called before begin_task".into()))?;
        if start.len() != net.num_params() {
            return Err(Error::Alignment {
                what: "SI snapshot",
                expected: net.num_params(),
                actual: start.len(),
            });
        }
        let omega = self
            .omega_path
            .iter()
            .zip(net.params().iter().zip(&start))
            .map(|(p, (end, begin))| p.max(0.0) / ((end - begin).powi(2) + self.xi))
            .collect();
        ImportanceMap::new(ImportanceMethod::Si, omega, self.steps)
    }
}

/// `max(Ω)/mean(Ω)` over the weights of every parameter layer; a quick view
/// of how heavy-tailed a map is.
pub fn layer_spread(net: &Network, map: &ImportanceMap) -> Vec<(usize, f64)> {
    net.param_index()
        .iter()
        .enumerate()
        .filter_map(|(i, slot)| {
            let w = &map.omega()[slot.as_ref()?.weights()];
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            let max = w.iter().copied().fold(0.0, f64::max);
            Some((i, if mean > 0.0 { max / mean } else { 0.0 }))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Split};
    use crate::nn::{LossKind, Optimizer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pixels = (0..n * 4).map(|_| rng.random::<u8>()).collect();
        let labels = (0..n).map(|_| rng.random_range(0..10u8)).collect();
        Dataset::from_raw(pixels, labels, 2, 2, Split::Train).unwrap()
    }

    #[test]
    fn accumulate_checks_method_and_sums() {
        let a = ImportanceMap::new(ImportanceMethod::Mas, vec![1.0, 2.0], 3).unwrap();
        let z = ImportanceMap::zeros(ImportanceMethod::Mas, 2);
        assert_eq!(accumulate(&z, &a).unwrap().omega(), a.omega());
        let s = accumulate(&a, &a).unwrap();
        assert_eq!(s.omega(), &[2.0, 4.0]);
        assert_eq!(s.n_samples_used(), 6);
        let si = ImportanceMap::zeros(ImportanceMethod::Si, 2);
        assert!(matches!(accumulate(&a, &si), Err(Error::MethodMismatch { .. })));
        assert!(ImportanceMap::new(ImportanceMethod::Si, vec![-1.0], 1).is_err());
    }

    #[test]
    fn label_and_argmax_agree_when_prediction_is_correct() {
        let mut net = Network::dense(&[4, 6, 10]).unwrap();
        net.seeded_init(2);
        let data = tiny_dataset(30, 4);
        let view = TaskView::identity(&data);
        let (x, _) = view.gather(&(0..30).collect::<Vec<_>>(), &[4]).unwrap();
        let predicted: Vec<u8> = net.predict(&x).unwrap().iter().map(|&p| p as u8).collect();
        let relabeled = data.with_labels(predicted).unwrap();
        let view = TaskView::identity(&relabeled);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let label = fisher_importance(&net, &view, FisherMode::Label, 30, &mut rng).unwrap();
        let argmax = fisher_importance(&net, &view, FisherMode::Argmax, 30, &mut rng).unwrap();
        assert_eq!(label.omega(), argmax.omega());
    }

    #[test]
    fn symmetric_net_has_equal_fisher_for_symmetric_weights() {
        // Two hidden units with identical incoming and outgoing weights are
        // interchangeable, so their importances must coincide.
        let mut net = Network::dense(&[4, 2, 10]).unwrap();
        let mut p = vec![0.0; net.num_params()];
        for j in 0..4 {
            p[j] = 0.3 + 0.1 * j as f64;
            p[4 + j] = 0.3 + 0.1 * j as f64;
        }
        let w2 = 4 * 2 + 2;
        for k in 0..10 {
            p[w2 + k * 2] = 0.05 * k as f64;
            p[w2 + k * 2 + 1] = 0.05 * k as f64;
        }
        net.set_params(&p).unwrap();
        let data = tiny_dataset(20, 1);
        let view = TaskView::identity(&data);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = fisher_importance(&net, &view, FisherMode::Label, 20, &mut rng).unwrap();
        for j in 0..4 {
            assert!((f.omega()[j] - f.omega()[4 + j]).abs() <= 1e-15 * f.omega()[j].max(1.0));
        }
    }

    #[test]
    fn mas_is_label_blind_and_duplication_invariant() {
        let mut net = Network::dense(&[4, 5, 10]).unwrap();
        net.seeded_init(3);
        let data = tiny_dataset(40, 9);
        let a = mas_importance(&net, &TaskView::identity(&data), 40).unwrap();
        let relabeled = data
            .with_labels(data.labels().iter().map(|l| (l + 3) % 10).collect())
            .unwrap();
        let b = mas_importance(&net, &TaskView::identity(&relabeled), 40).unwrap();
        assert_eq!(a.omega(), b.omega());

        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..2 {
            for i in 0..40 {
                pixels.extend_from_slice(data.image_bytes(i));
                labels.push(data.labels()[i]);
            }
        }
        let doubled = Dataset::from_raw(pixels, labels, 2, 2, Split::Train).unwrap();
        let c = mas_importance(&net, &TaskView::identity(&doubled), 80).unwrap();
        for (x, y) in a.omega().iter().zip(c.omega()) {
            assert!((x - y).abs() <= 1e-12 * x.max(1e-12));
        }
    }

    #[test]
    fn total_abs_signal_zero_input_and_homogeneity() {
        let mut net = Network::dense(&[4, 3, 10]).unwrap();
        net.seeded_init(5);
        let zeros = Dataset::from_raw(vec![0; 40], vec![1; 10], 2, 2, Split::Train).unwrap();
        let m = total_abs_signal_importance(&net, &TaskView::identity(&zeros), 10).unwrap();
        assert!(m.omega()[..12].iter().all(|&v| v == 0.0));

        let data = tiny_dataset(10, 2);
        let base = total_abs_signal_importance(&net, &TaskView::identity(&data), 10).unwrap();
        let mut doubled = net.clone();
        doubled.params_mut()[5] *= 2.0;
        let m = total_abs_signal_importance(&doubled, &TaskView::identity(&data), 10).unwrap();
        assert!((m.omega()[5] - 2.0 * base.omega()[5]).abs() < 1e-15);
    }

    #[test]
    fn too_many_samples_is_rejected() {
        let net = Network::dense(&[4, 10]).unwrap();
        let data = tiny_dataset(5, 0);
        assert!(matches!(
            mas_importance(&net, &TaskView::identity(&data), 6),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn si_usage_and_zero_learning_rate() {
        let mut acc = SiAccumulator::new(SI_DAMPING).unwrap();
        let net = Network::dense(&[4, 10]).unwrap();
        assert!(matches!(acc.finish_task(&net), Err(Error::Usage(_))));
        assert!(matches!(acc.record_step(&[], &[]), Err(Error::Usage(_))));
        assert!(SiAccumulator::new(0.0).is_err());

        let mut net = net;
        net.seeded_init(1);
        let data = tiny_dataset(20, 3);
        let view = TaskView::identity(&data);
        acc.begin_task(&net);
        let mut opt = Optimizer::sgd(0.0);
        for (x, y) in view.batches(5, Some(1), &[4]) {
            let before = net.params().to_vec();
            let (_, g) = net.backward(&x, &y, LossKind::CrossEntropy).unwrap();
            opt.step(&mut net, &g).unwrap();
            let delta: Vec<f64> = net.params().iter().zip(&before).map(|(a, b)| a - b).collect();
            acc.record_step(g.as_slice(), &delta).unwrap();
        }
        let m = acc.finish_task(&net).unwrap();
        assert!(m.omega().iter().all(|&v| v == 0.0));
        assert_eq!(m.n_samples_used(), 4);
    }

    #[test]
    fn si_single_sgd_step_path_is_lr_times_grad_squared() {
        let mut net = Network::dense(&[4, 10]).unwrap();
        net.seeded_init(3);
        let data = tiny_dataset(8, 7);
        let (x, y) = TaskView::identity(&data)
            .gather(&(0..8).collect::<Vec<_>>(), &[4])
            .unwrap();
        let (_, g) = net.backward(&x, &y, LossKind::CrossEntropy).unwrap();
        let mut acc = SiAccumulator::new(SI_DAMPING).unwrap();
        acc.begin_task(&net);
        let before = net.params().to_vec();
        Optimizer::sgd(0.05).step(&mut net, &g).unwrap();
        let delta: Vec<f64> = net.params().iter().zip(&before).map(|(a, b)| a - b).collect();
        acc.record_step(g.as_slice(), &delta).unwrap();
        for (p, gi) in acc.omega_path().iter().zip(g.as_slice()) {
            assert!(*p >= 0.0);
            assert!((p - 0.05 * gi * gi).abs() <= 1e-15 + 1e-12 * p);
        }
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let m = ImportanceMap::new(ImportanceMethod::FisherSampled, vec![0.5, 1e-300, 7.0], 12).unwrap();
        let (bin, json) = (dir.path().join("omega.bin"), dir.path().join("omega.json"));
        m.save(&bin, &json, "in:4,dense:4x10").unwrap();
        let (back, fp) = ImportanceMap::load(&bin, &json).unwrap();
        assert_eq!(back, m);
        assert_eq!(fp, "in:4,dense:4x10");
        assert_eq!(fs::metadata(&bin).unwrap().len(), 24);
    }
}
