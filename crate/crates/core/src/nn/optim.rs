use serde::{Deserialize, Serialize};

use super::network::{GradientVector, Network};
use crate::error::{Error, Result};

/// Adam hyperparameters; the defaults are the ones used for every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        config: AdamConfig,
        m: Vec<f64>,
        v: Vec<f64>,
        t: u64,
    },
}

impl Optimizer {
    pub fn sgd(lr: f64) -> Self {
        Optimizer::Sgd { lr }
    }

    pub fn adam(config: AdamConfig) -> Self {
        Optimizer::Adam {
            config,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    /// Nominal step size α.
    pub fn learning_rate(&self) -> f64 {
        match self {
            Optimizer::Sgd { lr } => *lr,
            Optimizer::Adam { config, .. } => config.lr,
        }
    }

    pub fn step(&mut self, net: &mut Network, grad: &GradientVector) -> Result<()> {
        let params = net.params_mut();
        let g = grad.as_slice();
        if g.len() != params.len() {
            return Err(Error::Alignment {
                what: "gradient",
                expected: params.len(),
                actual: g.len(),
            });
        }
        match self {
            Optimizer::Sgd { lr } => {
                for (w, g) in params.iter_mut().zip(g) {
                    *w -= *lr * g;
                }
            }
            Optimizer::Adam { config, m, v, t } => {
                if m.is_empty() {
                    *m = vec![0.0; params.len()];
                    *v = vec![0.0; params.len()];
                }
                *t += 1;
                let AdamConfig { lr, beta1, beta2, eps } = *config;
                let c1 = 1.0 - beta1.powi(*t as i32);
                let c2 = 1.0 - beta2.powi(*t as i32);
                for (((w, g), m), v) in params.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let mhat = *m / c1;
                    let vhat = *v / c2;
                    *w -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
        }
        if let Some(index) = params.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteParameter { index });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::LayerSpec;

    fn single_weight(w: f64) -> Network {
        let mut net = Network::new(vec![1], vec![LayerSpec::Dense { inputs: 1, outputs: 1 }]).unwrap();
        net.set_params(&[w, 0.0]).unwrap();
        net
    }

    #[test]
    fn sgd_one_step() {
        let mut net = single_weight(1.0);
        Optimizer::sgd(0.1).step(&mut net, &vec![2.0, 0.0].into()).unwrap();
        assert!((net.params()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        for g in [1e-4, 0.3, 250.0, -7.0] {
            let mut net = single_weight(0.0);
            let mut opt = Optimizer::adam(AdamConfig::default());
            opt.step(&mut net, &vec![g, 0.0].into()).unwrap();
            // t = 1: mhat = g, vhat = g², update = lr·g/(|g|+eps).
            let expected = -0.001 * g / (g.abs() + 1e-8);
            assert!((net.params()[0] - expected).abs() < 1e-15);
            assert!((net.params()[0].abs() - 0.001).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for mut opt in [Optimizer::sgd(0.5), Optimizer::adam(AdamConfig::default())] {
            let mut net = single_weight(0.25);
            opt.step(&mut net, &vec![0.0, 0.0].into()).unwrap();
            assert_eq!(net.params(), &[0.25, 0.0]);
        }
    }

    #[test]
    fn non_finite_parameter_is_reported() {
        let mut net = single_weight(f64::MAX);
        let err = Optimizer::sgd(1.0)
            .step(&mut net, &vec![-f64::MAX, 0.0].into())
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteParameter { index: 0 }));
    }
}
