//! Backprop against central finite differences on small random networks.

use consolidate_core::nn::{LayerSpec, LossKind, Network};
use consolidate_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn finite_difference(net: &Network, x: &Tensor, y: &[usize]) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.num_params())
        .map(|i| {
            let w = net.params()[i];
            probe.params_mut()[i] = w + STEP;
            let up = probe.loss(x, y).unwrap();
            probe.params_mut()[i] = w - STEP;
            let down = probe.loss(x, y).unwrap();
            probe.params_mut()[i] = w;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn check(mut net: Network, seed: u64) {
    assert!(net.num_params() <= 100, "{} params", net.num_params());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    net.seeded_init(seed);
    for p in net.params_mut() {
        *p += 0.1 * (rng.random::<f64>() - 0.5);
    }
    let batch = 3;
    let mut shape = vec![batch];
    shape.extend_from_slice(net.input_shape());
    let len: usize = shape.iter().product();
    let x = Tensor::new(shape, (0..len).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap();
    let k = net.num_classes();
    let y: Vec<usize> = (0..batch).map(|_| rng.random_range(0..k)).collect();

    let (_, grad) = net.backward(&x, &y, LossKind::CrossEntropy).unwrap();
    let numeric = finite_difference(&net, &x, &y);
    for (i, (a, n)) in grad.as_slice().iter().zip(&numeric).enumerate() {
        let scale = a.abs().max(n.abs());
        assert!(
            (a - n).abs() <= REL_TOL * scale + 1e-9,
            "param {i}: analytic {a} vs numeric {n} ({})",
            net.fingerprint()
        );
    }
}

#[test]
fn dense_relu_softmax() {
    for seed in 0..5 {
        check(Network::dense(&[4, 5, 10]).unwrap(), seed);
    }
}

#[test]
fn conv_pool_dense() {
    for seed in 0..5 {
        let net = Network::new(
            vec![1, 5, 5],
            vec![
                LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: 2,
                    kernel: 2,
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2d { kernel: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { inputs: 8, outputs: 10 },
                LayerSpec::SoftmaxOutput,
            ],
        )
        .unwrap();
        check(net, seed);
    }
}

#[test]
fn strided_conv_two_channels() {
    for seed in 0..5 {
        let net = Network::new(
            vec![2, 7, 7],
            vec![
                LayerSpec::Conv2d {
                    in_channels: 2,
                    out_channels: 2,
                    kernel: 3,
                    stride: 2,
                },
                LayerSpec::Relu,
                LayerSpec::Flatten,
                LayerSpec::Dense { inputs: 18, outputs: 3 },
                LayerSpec::SoftmaxOutput,
            ],
        )
        .unwrap();
        check(net, seed);
    }
}

#[test]
fn stacked_convs() {
    for seed in 0..3 {
        let net = Network::new(
            vec![1, 6, 6],
            vec![
                LayerSpec::Conv2d {
                    in_channels: 1,
                    out_channels: 2,
                    kernel: 2,
                    stride: 1,
                },
                LayerSpec::Relu,
                LayerSpec::Conv2d {
                    in_channels: 2,
                    out_channels: 2,
                    kernel: 2,
                    stride: 1,
                },
                LayerSpec::MaxPool2d { kernel: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense { inputs: 8, outputs: 4 },
                LayerSpec::SoftmaxOutput,
            ],
        )
        .unwrap();
        check(net, seed);
    }
}
