use super::ObjectiveModel;
use crate::{Error, Result};

/// Logistic regression with a constant-1 bias feature appended by the model.
/// Per-datum term: `y log s(z) + (1-y) log(1-s(z))` with `z = theta . [x, 1]`,
/// evaluated in log-sum-exp stabilized form. The prior is flat.
#[derive(Debug, Clone, Default)]
pub struct LogisticModel;

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    fn dot(x: &[f64], theta: &[f64]) -> Result<f64> {
        if theta.len() != x.len() + 1 {
            return Err(Error::DimensionMismatch { expected: x.len() + 1, got: theta.len() });
        }
        let mut z = theta[x.len()]; // bias
        for (xi, ti) in x.iter().zip(theta) {
            z += xi * ti;
        }
        Ok(z)
    }
}

impl ObjectiveModel for LogisticModel {
    fn param_dim(&self, data_dim: usize) -> usize {
        data_dim + 1
    }

    fn log_term(&self, x: &[f64], y: f64, theta: &[f64]) -> Result<f64> {
        let z = Self::dot(x, theta)?;
        // y z - log(1 + e^z)
        Ok(y * z - softplus(z))
    }

    fn grad(&self, x: &[f64], y: f64, theta: &[f64]) -> Result<Vec<f64>> {
        let z = Self::dot(x, theta)?;
        let r = y - sigmoid(z);
        let mut g: Vec<f64> = x.iter().map(|xi| r * xi).collect();
        g.push(r); // bias coordinate
        Ok(g)
    }

    fn log_prior(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn prior_grad(&self, theta: &[f64]) -> Vec<f64> {
        vec![0.0; theta.len()]
    }
}
