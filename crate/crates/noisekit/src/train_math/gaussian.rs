//! Closed-form KL divergence from a diagonal Gaussian posterior to the
//! standard normal prior.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("mean has {mean} dims but log_variance has {log_variance}")]
    DimensionMismatch { mean: usize, log_variance: usize },
    #[error("posterior contains a non-finite entry at dim {0}")]
    NonFinite(usize),
    #[error("posterior is zero-dimensional")]
    Empty,
}

/// A diagonal Gaussian `N(mean, diag(exp(log_variance)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: Vec<f64>,
    pub log_variance: Vec<f64>,
}

impl GaussianPosterior {
    pub fn new(mean: Vec<f64>, log_variance: Vec<f64>) -> Result<GaussianPosterior, GaussianError> {
        if mean.len() != log_variance.len() {
            return Err(GaussianError::DimensionMismatch {
                mean: mean.len(),
                log_variance: log_variance.len(),
            });
        }
        if mean.is_empty() {
            return Err(GaussianError::Empty);
        }
        for (d, (m, lv)) in mean.iter().zip(&log_variance).enumerate() {
            if !m.is_finite() || !lv.is_finite() {
                return Err(GaussianError::NonFinite(d));
            }
        }
        Ok(GaussianPosterior { mean, log_variance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `KL(q || N(0, I)) = 1/2 * sum_d (mu_d^2 + sigma_d^2 - 1 - ln sigma_d^2)`.
/// Non-negative, and exactly zero at `mu = 0`, `sigma^2 = 1`.
pub fn kl_to_standard_normal(posterior: &GaussianPosterior) -> f64 {
    0.5 * posterior
        .mean
        .iter()
        .zip(&posterior.log_variance)
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}
