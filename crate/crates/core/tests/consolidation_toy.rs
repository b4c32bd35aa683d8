//! Two-parameter toy: task A pulls both weights to `a`, task B to `b`.
//! With the anchor at the task-A optimum, plain SGD on B plus the penalty
//! converges to `(b + λΩ a) / (1 + λΩ)` per coordinate.

use consolidate_core::consolidation::{consolidate, PenaltyForm};
use consolidate_core::importance::{ImportanceMap, ImportanceMethod};
use consolidate_core::nn::{GradientVector, LayerSpec, Network, Optimizer};

fn toy() -> Network {
    // Dense(1→1): one weight and one bias, used here as a plain 2-vector.
    Network::new(vec![1], vec![LayerSpec::Dense { inputs: 1, outputs: 1 }]).unwrap()
}

fn quad_grad(w: &[f64], target: &[f64]) -> GradientVector {
    w.iter().zip(target).map(|(w, t)| w - t).collect::<Vec<_>>().into()
}

fn train(net: &mut Network, target: &[f64], extra: impl Fn(&[f64], &mut [f64]), steps: usize) {
    let mut opt = Optimizer::sgd(0.05);
    for _ in 0..steps {
        let mut g = quad_grad(net.params(), target);
        extra(net.params(), g.as_mut_slice());
        opt.step(net, &g).unwrap();
    }
}

#[test]
fn penalty_anchors_to_task_a_weights() {
    let a = [1.0, -2.0];
    let b = [3.0, 4.0];
    let omega = [2.0, 0.5];
    let lambda = 1.5;
    let mut net = toy();
    net.set_params(&[-1.0, 0.5]).unwrap();
    train(&mut net, &a, |_, _| {}, 2000);
    for (w, t) in net.params().iter().zip(&a) {
        assert!((w - t).abs() < 1e-9);
    }

    let map = ImportanceMap::new(ImportanceMethod::Mas, omega.to_vec(), 1).unwrap();
    let state = consolidate(&net, map, lambda, 0.05, PenaltyForm::Original).unwrap();
    assert_eq!(state.penalty_value(net.params()).unwrap(), 0.0);

    // Start task B away from both optima: the penalty gradient points back to a.
    net.set_params(&[5.0, 5.0]).unwrap();
    let pg = state.penalty_gradient(net.params()).unwrap();
    for ((g, w), a) in pg.as_slice().iter().zip(net.params()).zip(&a) {
        assert!(g * (w - a) > 0.0);
    }

    train(&mut net, &b, |w, g| state.add_penalty_gradient(w, g).unwrap(), 4000);
    for i in 0..2 {
        let lo = lambda * omega[i];
        let expected = (b[i] + lo * a[i]) / (1.0 + lo);
        assert!(
            (net.params()[i] - expected).abs() < 1e-9,
            "{i}: {} vs {expected}",
            net.params()[i]
        );
    }
}

#[test]
fn stabilized_anchor_uses_reweighted_importance() {
    let a = [0.0, 0.0];
    let b = [1.0, 1.0];
    let (alpha, lambda) = (0.05, 4.0);
    let omega = [10.0, 0.1];
    let mut net = toy();
    net.set_params(&a).unwrap();
    let map = ImportanceMap::new(ImportanceMethod::Mas, omega.to_vec(), 1).unwrap();
    let state = consolidate(&net, map, lambda, alpha, PenaltyForm::Stabilized).unwrap();
    train(&mut net, &b, |w, g| state.add_penalty_gradient(w, g).unwrap(), 4000);
    for i in 0..2 {
        let eff = lambda * omega[i] / (alpha * lambda * omega[i] + 1.0);
        let expected = b[i] / (1.0 + eff);
        assert!((net.params()[i] - expected).abs() < 1e-9);
    }
}
