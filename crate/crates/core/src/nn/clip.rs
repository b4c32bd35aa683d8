use super::network::GradientVector;

/// Rescales `grad` so that its L2 norm is at most `max_norm`; direction is kept.
///
/// A few dominant components can swamp everything else: after clipping
/// `[1e6, 1e-6]` to norm 1, the second entry is about 1e-12.
pub fn clip_global_norm(grad: &GradientVector, max_norm: f64) -> GradientVector {
    assert!(max_norm > 0.0, "max_norm must be positive, got {max_norm}");
    let norm = grad.norm();
    if norm <= max_norm {
        return grad.clone();
    }
    let scale = max_norm / norm;
    grad.as_slice().iter().map(|g| g * scale).collect::<Vec<_>>().into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn below_threshold_is_untouched() {
        let g = GradientVector::from(vec![3.0, 4.0]);
        assert_eq!(clip_global_norm(&g, 10.0), g);
    }

    #[test]
    fn scales_to_max_norm() {
        let g = clip_global_norm(&vec![3.0, 4.0].into(), 1.0);
        assert!((g.as_slice()[0] - 0.6).abs() < 1e-15);
        assert!((g.as_slice()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn large_component_swamps_small_one() {
        let g = clip_global_norm(&vec![1e6, 1e-6].into(), 1.0);
        assert!((g.as_slice()[0] - 1.0).abs() < 1e-12);
        assert!((g.as_slice()[1] - 1e-12).abs() < 1e-24);
    }

    proptest! {
        #[test]
        fn idempotent_and_direction_preserving(
            v in prop::collection::vec(-1e3f64..1e3, 1..20),
            max_norm in 1e-3f64..1e3,
        ) {
            let g = GradientVector::from(v);
            let once = clip_global_norm(&g, max_norm);
            let twice = clip_global_norm(&once, max_norm);
            prop_assert!(once.norm() <= max_norm * (1.0 + 1e-12));
            for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
            let n0 = g.norm();
            if n0 > 0.0 {
                let n1 = once.norm();
                for (a, b) in g.as_slice().iter().zip(once.as_slice()) {
                    prop_assert!((a / n0 - b / n1).abs() < 1e-12);
                }
            }
        }
    }
}
