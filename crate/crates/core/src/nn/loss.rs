use serde::{Deserialize, Serialize};

use super::network::{GradientVector, Network, Reduction};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean softmax cross-entropy over the batch.
    #[default]
    CrossEntropy,
}

pub fn softmax_row(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

pub fn log_softmax_row(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = z - lse;
    }
}

impl Network {
    /// Mean loss over the batch and its gradient with respect to the parameters.
    pub fn backward(&self, batch: &Tensor, targets: &[usize], loss: LossKind) -> Result<(f64, GradientVector)> {
        let LossKind::CrossEntropy = loss;
        let n = batch.rows();
        if targets.len() != n {
            return Err(Error::Alignment {
                what: "targets",
                expected: n,
                actual: targets.len(),
            });
        }
        let trace = self.trace(batch)?;
        let logits = trace.output();
        let k = logits.row_len();
        let mut dlogits = Tensor::zeros(logits.shape().to_vec());
        let mut logp = vec![0.0; k];
        let mut total = 0.0;
        for (s, (&y, drow)) in targets.iter().zip(dlogits.data_mut().chunks_mut(k)).enumerate() {
            if y >= k {
                return Err(Error::BadTarget {
                    position: s,
                    target: y,
                    classes: k,
                });
            }
            log_softmax_row(logits.row(s), &mut logp);
            total -= logp[y];
            for (d, lp) in drow.iter_mut().zip(&logp) {
                *d = lp.exp() / n as f64;
            }
            drow[y] -= 1.0 / n as f64;
        }
        let value = total / n as f64;
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { batch: 0 });
        }
        let mut grad = GradientVector::zeros(self.num_params());
        self.backprop(&trace, dlogits, Reduction::Sum, grad.as_mut_slice())?;
        Ok((value.max(0.0), grad))
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, batch: &Tensor, targets: &[usize]) -> Result<f64> {
        let logits = self.logits(batch)?;
        let k = logits.row_len();
        let mut logp = vec![0.0; k];
        let mut total = 0.0;
        for (s, &y) in targets.iter().enumerate() {
            log_softmax_row(logits.row(s), &mut logp);
            total -= logp[y];
        }
        Ok(total / targets.len() as f64)
    }

    /// Predicted class per row.
    pub fn predict(&self, batch: &Tensor) -> Result<Vec<usize>> {
        let logits = self.logits(batch)?;
        Ok((0..logits.rows()).map(|s| argmax_row(logits.row(s))).collect())
    }
}

pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut out = [0.0; 4];
        softmax_row(&[1000.0, -3.0, 2.5, 999.0], &mut out);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut lp = [0.0; 4];
        log_softmax_row(&[1000.0, -3.0, 2.5, 999.0], &mut lp);
        assert!(lp.iter().all(|v| v.is_finite() && *v <= 0.0));
    }

    #[test]
    fn duplicated_sample_gives_single_sample_gradient() {
        let mut net = Network::dense(&[3, 4, 10]).unwrap();
        net.seeded_init(1);
        let one = Tensor::new(vec![1, 3], vec![0.2, -0.5, 0.9]).unwrap();
        let two = Tensor::new(vec![2, 3], vec![0.2, -0.5, 0.9, 0.2, -0.5, 0.9]).unwrap();
        let (l1, g1) = net.backward(&one, &[4], LossKind::CrossEntropy).unwrap();
        let (l2, g2) = net.backward(&two, &[4, 4], LossKind::CrossEntropy).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        for (a, b) in g1.as_slice().iter().zip(g2.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn perfect_prediction_has_tiny_loss_and_gradient() {
        let mut net = Network::new(
            vec![10],
            vec![
                LayerSpec::Dense {
                    inputs: 10,
                    outputs: 10,
                },
                LayerSpec::SoftmaxOutput,
            ],
        )
        .unwrap();
        let mut p = vec![0.0; 110];
        for i in 0..10 {
            p[i * 10 + i] = 60.0;
        }
        net.set_params(&p).unwrap();
        let mut x = vec![0.0; 10];
        x[3] = 1.0;
        let x = Tensor::new(vec![1, 10], x).unwrap();
        let (loss, grad) = net.backward(&x, &[3], LossKind::CrossEntropy).unwrap();
        assert!(loss <= 1e-12);
        assert!(grad.norm() <= 1e-6);
    }

    #[test]
    fn rejects_out_of_range_target() {
        let net = Network::dense(&[2, 10]).unwrap();
        let x = Tensor::zeros(vec![1, 2]);
        assert!(matches!(
            net.backward(&x, &[10], LossKind::CrossEntropy),
            Err(Error::BadTarget { target: 10, .. })
        ));
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let mut net = Network::dense(&[2, 10]).unwrap();
        net.params_mut()[0] = f64::NAN;
        let x = Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            net.backward(&x, &[0], LossKind::CrossEntropy),
            Err(Error::NonFiniteLoss { .. })
        ));
    }
}
