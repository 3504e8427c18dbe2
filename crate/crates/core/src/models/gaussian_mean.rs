use super::ObjectiveModel;
use crate::{Error, Result};

/// One-dimensional Gaussian with unknown mean and known variance
/// `sigma2`, under a conjugate `N(prior_mean, prior_var)` prior.
/// Per-datum term: `-(x - theta)^2 / (2 sigma2)` up to a constant.
#[derive(Debug, Clone)]
pub struct GaussianMeanModel {
    pub sigma2: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
}

impl GaussianMeanModel {
    pub fn new(sigma2: f64, prior_mean: f64, prior_var: f64) -> Result<Self> {
        if sigma2 <= 0.0 {
            return Err(Error::NonPositiveVariance(sigma2));
        }
        if prior_var <= 0.0 {
            return Err(Error::NonPositiveVariance(prior_var));
        }
        Ok(Self { sigma2, prior_mean, prior_var })
    }
}

impl ObjectiveModel for GaussianMeanModel {
    fn param_dim(&self, _data_dim: usize) -> usize {
        1
    }

    fn log_term(&self, x: &[f64], _y: f64, theta: &[f64]) -> Result<f64> {
        if theta.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: theta.len() });
        }
        let d = x[0] - theta[0];
        Ok(-d * d / (2.0 * self.sigma2))
    }

    fn grad(&self, x: &[f64], _y: f64, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: theta.len() });
        }
        Ok(vec![(x[0] - theta[0]) / self.sigma2])
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let d = theta[0] - self.prior_mean;
        -d * d / (2.0 * self.prior_var)
    }

    fn prior_grad(&self, theta: &[f64]) -> Vec<f64> {
        vec![-(theta[0] - self.prior_mean) / self.prior_var]
    }
}
