//! Student-t confidence intervals for the mean.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Mean and two-sided confidence half-width `t·s/√n`, with `t` the
/// `(1 + confidence)/2` quantile of Student's t on `n − 1` degrees of freedom.
pub fn mean_ci(samples: &[f64], confidence: f64) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Stats(format!(
            "confidence interval needs at least 2 samples, got {n}"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Stats(format!(
            "confidence level must be in (0, 1), got {confidence}"
        )));
    }
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok((samples[0], 0.0));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| Error::Stats(e.to_string()))?
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok((mean, t * var.sqrt() / nf.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_width() {
        assert_eq!(mean_ci(&[0.93; 20], 0.95).unwrap(), (0.93, 0.0));
    }

    #[test]
    fn two_point_intervals() {
        // t_{0.975, 1} = 12.7062047...
        let (m, h) = mean_ci(&[0.94, 0.96], 0.95).unwrap();
        assert!((m - 0.95).abs() < 1e-12);
        assert!((h - 0.127062).abs() < 1e-5, "{h}");
        let (m, h) = mean_ci(&[0.0, 1.0], 0.95).unwrap();
        assert_eq!(m, 0.5);
        assert!((h - 6.353102).abs() < 1e-5, "{h}");
    }

    #[test]
    fn width_scales_with_inverse_sqrt_n() {
        // Alternating ±1 keeps s close to 1; compare against t·s/√n directly.
        for n in [4usize, 16, 64] {
            let xs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let s = (n as f64 / (n as f64 - 1.0)).sqrt();
            let t = StudentsT::new(0.0, 1.0, n as f64 - 1.0).unwrap().inverse_cdf(0.975);
            let (_, h) = mean_ci(&xs, 0.95).unwrap();
            assert!((h - t * s / (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_single_sample() {
        assert!(mean_ci(&[1.0], 0.95).is_err());
    }
}
