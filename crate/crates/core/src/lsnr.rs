//! The learning signal-to-noise ratio: gradient sample moments, the LSNR
//! statistic `(n/p) gbar' S^{-1} gbar`, its fitted non-central chi-squared
//! sampling law, the CDF stopping criterion, and bootstrap validation.

use nalgebra::{DMatrix, DVector};

use crate::models::{Dataset, Minibatch, ObjectiveModel};
use crate::numerics::{NoncentralChi2, RngStream, SpdMatrix};
use crate::{Error, Result};

/// How the gradient covariance enters the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMode {
    /// Full sample covariance; requires n > p.
    Full,
    /// Diagonal covariance for high-dimensional models, behind this
    /// explicit flag only (never a silent fallback).
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct LsnrConfig {
    /// Ridge factor tau: tau * trace(S)/p is added to the diagonal of S.
    pub ridge_tau: f64,
    pub mode: CovarianceMode,
    /// Stop threshold on CDF(LSNR_p = 1).
    pub delta: f64,
}

impl Default for LsnrConfig {
    fn default() -> Self {
        Self { ridge_tau: 1e-10, mode: CovarianceMode::Full, delta: 0.5 }
    }
}

/// Sample mean and covariance (n-1 denominator) of per-datum gradients
/// over one minibatch.
#[derive(Debug, Clone)]
pub struct GradientMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n: usize,
}

pub fn gradient_moments(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    batch: &Minibatch,
    theta: &[f64],
) -> Result<GradientMoments> {
    let grads: Vec<Vec<f64>> = batch
        .indices()
        .iter()
        .map(|&i| {
            let (x, y) = data.row(i);
            model.grad(x, y, theta)
        })
        .collect::<Result<_>>()?;
    moments_of(&grads)
}

/// Moments of an explicit gradient sample (used directly by the tests and
/// by the Fisher preconditioner).
pub fn moments_of(grads: &[Vec<f64>]) -> Result<GradientMoments> {
    let n = grads.len();
    if n < 2 {
        return Err(Error::BatchTooSmall { n, min: 2 });
    }
    let p = grads[0].len();
    let mut mean = DVector::zeros(p);
    for g in grads {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        mean += DVector::from_row_slice(g);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(p, p);
    for g in grads {
        let d = DVector::from_row_slice(g) - &mean;
        cov += &d * d.transpose();
    }
    cov /= (n - 1) as f64;
    Ok(GradientMoments { mean, cov, n })
}

/// Everything the stopping rule needs about one minibatch.
#[derive(Debug, Clone, Copy)]
pub struct LsnrReport {
    /// `(n/p) gbar' (S + ridge)^{-1} gbar`.
    pub lsnr: f64,
    pub dof: usize,
    /// Plug-in non-centrality `n gbar' S^{-1} gbar = p * lsnr`.
    pub lambda_hat: f64,
    /// `CDF(LSNR_p = 1)` under the fitted law.
    pub cdf_at_one: f64,
    pub stop: bool,
    pub ridge_applied: f64,
}

/// Compute the LSNR report for a set of gradient moments.
pub fn lsnr_report(m: &GradientMoments, cfg: &LsnrConfig) -> Result<LsnrReport> {
    let p = m.mean.len();
    let (quad, ridge_applied) = match cfg.mode {
        CovarianceMode::Full => {
            if m.n <= p {
                return Err(Error::InsufficientBatch { n: m.n, p });
            }
            let s = SpdMatrix::new(m.cov.clone()).map_err(|_| Error::SingularCovariance)?;
            let (x, ridge) = s.solve(&m.mean, cfg.ridge_tau).map_err(|e| match e {
                Error::NotPositiveDefinite { .. } => Error::SingularCovariance,
                other => other,
            })?;
            (m.mean.dot(&x), ridge)
        }
        CovarianceMode::Diagonal => {
            let trace: f64 = (0..p).map(|i| m.cov[(i, i)]).sum();
            let ridge = cfg.ridge_tau * trace / p as f64;
            let mut quad = 0.0;
            for i in 0..p {
                let v = m.cov[(i, i)] + ridge;
                if v <= 0.0 {
                    return Err(Error::SingularCovariance);
                }
                quad += m.mean[i] * m.mean[i] / v;
            }
            (quad, ridge)
        }
    };
    let lambda_hat = m.n as f64 * quad;
    if !lambda_hat.is_finite() || lambda_hat < 0.0 {
        return Err(Error::SingularCovariance);
    }
    let lsnr = lambda_hat / p as f64;
    let dist = NoncentralChi2::new(p, lambda_hat)?;
    let cdf_at_one = dist.lsnr_cdf(1.0);
    Ok(LsnrReport {
        lsnr,
        dof: p,
        lambda_hat,
        cdf_at_one,
        stop: cdf_at_one > cfg.delta,
        ridge_applied,
    })
}

/// Fitted sampling law of `p * LSNR_p`: non-central chi-squared with `p`
/// degrees of freedom and the plug-in non-centrality.
pub fn fit_sampling_distribution(m: &GradientMoments, cfg: &LsnrConfig) -> Result<NoncentralChi2> {
    let r = lsnr_report(m, cfg)?;
    NoncentralChi2::new(r.dof, r.lambda_hat)
}

/// Stop when `CDF(LSNR_p = 1) > delta`.
pub fn stop_criterion(dof: usize, lambda_hat: f64, delta: f64) -> Result<bool> {
    let dist = NoncentralChi2::new(dof, lambda_hat)?;
    Ok(dist.lsnr_cdf(1.0) > delta)
}

/// LSNR values of `b` bootstrap replicates: each resamples N rows with
/// replacement and recomputes moments and the statistic from scratch.
pub fn bootstrap_lsnr(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    theta: &[f64],
    b: usize,
    cfg: &LsnrConfig,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(b);
    for _ in 0..b {
        let idx = data.bootstrap_resample(rng);
        let batch = Minibatch::from_indices(idx);
        let m = gradient_moments(model, data, &batch, theta)?;
        out.push(lsnr_report(&m, cfg)?.lsnr);
    }
    Ok(out)
}
