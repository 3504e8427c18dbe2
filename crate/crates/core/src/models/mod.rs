//! Datasets and differentiable per-datum objectives shared by the trainers
//! and samplers.

mod dataset;
mod gaussian_mean;
mod logistic;
pub mod synthetic;

pub use dataset::{ingest_csv, sample_minibatch, CsvSchema, Dataset, Minibatch};
pub use gaussian_mean::GaussianMeanModel;
pub use logistic::LogisticModel;

use crate::Result;

/// A per-datum objective: log term, its gradient, and a prior over the
/// parameters. Gradients must match central finite differences of the log
/// term to 1e-5 relative error.
pub trait ObjectiveModel {
    /// Parameter dimension for a dataset with `data_dim` features.
    fn param_dim(&self, data_dim: usize) -> usize;

    /// Per-datum log objective term.
    fn log_term(&self, x: &[f64], y: f64, theta: &[f64]) -> Result<f64>;

    /// Gradient of the per-datum term with respect to theta.
    fn grad(&self, x: &[f64], y: f64, theta: &[f64]) -> Result<Vec<f64>>;

    /// Log prior density of theta (up to a constant).
    fn log_prior(&self, theta: &[f64]) -> f64;

    /// Gradient of the log prior.
    fn prior_grad(&self, theta: &[f64]) -> Vec<f64>;
}

/// Mean per-datum log term over a set of row indices.
pub fn mean_objective(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    indices: &[usize],
    theta: &[f64],
) -> Result<f64> {
    let mut acc = 0.0;
    for &i in indices {
        let (x, y) = data.row(i);
        acc += model.log_term(x, y, theta)?;
    }
    Ok(acc / indices.len() as f64)
}
