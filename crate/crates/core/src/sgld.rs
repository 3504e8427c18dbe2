//! Stochastic gradient Langevin dynamics: minibatch log-posterior drift with
//! stepsize-coupled injected noise, Robbins-Monro annealing with an optional
//! floor, and an optional empirical-Fisher preconditioner.

use nalgebra::{DMatrix, DVector};

use crate::lsnr::moments_of;
use crate::models::{sample_minibatch, Dataset, Minibatch, ObjectiveModel};
use crate::numerics::{RngStream, SpdMatrix};
use crate::trace::{ChainStep, ChainTrace};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SgldConfig {
    /// Schedule eps_t = max(a (b + t)^-gamma, eps_min).
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub eps_min: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub precondition: bool,
    /// Steps before the preconditioner is estimated and frozen.
    pub precond_window: usize,
    pub ridge_tau: f64,
}

impl Default for SgldConfig {
    fn default() -> Self {
        Self {
            a: 0.01,
            b: 1.0,
            gamma: 0.55,
            eps_min: 0.0,
            batch_size: 10,
            iterations: 1000,
            burn_in: 0,
            precondition: false,
            precond_window: 100,
            ridge_tau: 1e-8,
        }
    }
}

impl SgldConfig {
    pub fn validate(&self, n_total: usize) -> Result<()> {
        if self.a <= 0.0 || self.b < 0.0 {
            return Err(Error::InvalidConfig("need a > 0 and b >= 0".into()));
        }
        if !(self.gamma > 0.5 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0.5, 1]".into()));
        }
        if self.batch_size == 0 || self.batch_size > n_total {
            return Err(Error::InvalidConfig("batch size must lie in [1, N]".into()));
        }
        if self.eps_min < 0.0 {
            return Err(Error::InvalidConfig("stepsize floor must be >= 0".into()));
        }
        Ok(())
    }
}

/// Annealed stepsize, clamped at the floor; non-increasing in `t`. Steps
/// are counted from zero, so the first step sees `a (b + 1)^-gamma`.
pub fn stepsize(t: usize, a: f64, b: f64, gamma: f64, eps_min: f64) -> f64 {
    (a * (b + t as f64 + 1.0).powf(-gamma)).max(eps_min)
}

/// Frozen preconditioner: the matrix `C` premultiplies the drift and shapes
/// the injected noise as `N(0, eps C)`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    pub matrix: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl Preconditioner {
    pub fn new(matrix: SpdMatrix) -> Result<Self> {
        let (chol, _) = matrix.cholesky(0.0).map_err(|_| Error::SingularCovariance)?;
        Ok(Self { matrix: matrix.as_matrix().clone(), chol })
    }
}

/// Inverse of the ridge-regularized empirical covariance of per-datum
/// gradients, symmetrized.
pub fn empirical_fisher_preconditioner(grad_samples: &[Vec<f64>], ridge_tau: f64) -> Result<SpdMatrix> {
    let m = moments_of(grad_samples)?;
    let p = m.mean.len();
    if grad_samples.len() <= p {
        return Err(Error::InsufficientBatch { n: grad_samples.len(), p });
    }
    let cov = SpdMatrix::new(m.cov).map_err(|_| Error::SingularCovariance)?;
    cov.inverse(ridge_tau).map_err(|_| Error::SingularCovariance)
}

/// Stochastic log-posterior gradient: `prior_grad + (scale_total / n) sum_batch grad`.
fn stochastic_gradient(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    theta: &[f64],
    batch: &Minibatch,
    scale_total: usize,
) -> Result<DVector<f64>> {
    let p = theta.len();
    let mut g = DVector::from_vec(model.prior_grad(theta));
    let factor = scale_total as f64 / batch.len() as f64;
    let mut sum = DVector::zeros(p);
    for &i in batch.indices() {
        let (x, y) = data.row(i);
        sum += DVector::from_vec(model.grad(x, y, theta)?);
    }
    g += sum * factor;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    Ok(g)
}

/// One SGLD update. With `noise_rng = None` and a full batch this is exactly
/// a gradient step of size `eps / 2` on the log-posterior.
pub fn sgld_step(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    theta: &[f64],
    batch: &Minibatch,
    eps: f64,
    scale_total: usize,
    precond: Option<&Preconditioner>,
    noise_rng: Option<&mut RngStream>,
) -> Result<Vec<f64>> {
    let g = stochastic_gradient(model, data, theta, batch, scale_total)?;
    let p = theta.len();
    let drift = match precond {
        Some(c) => &c.matrix * &g * (eps / 2.0),
        None => g * (eps / 2.0),
    };
    let mut out: Vec<f64> = theta.iter().zip(drift.iter()).map(|(t, d)| t + d).collect();
    if let Some(rng) = noise_rng {
        let sd = eps.sqrt();
        match precond {
            Some(c) => {
                let z: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
                for i in 0..p {
                    for (j, zj) in z.iter().enumerate().take(i + 1) {
                        out[i] += sd * c.chol[(i, j)] * zj;
                    }
                }
            }
            None => {
                for o in out.iter_mut() {
                    *o += sd * rng.normal();
                }
            }
        }
    }
    Ok(out)
}

/// Run an SGLD chain: fresh minibatch per step, trace recorded after
/// burn-in. All draws come from `rng.substream(0)` so the distributed
/// harness can reproduce a single-worker run bit for bit.
pub fn run_sgld(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    config: &SgldConfig,
    init_theta: &[f64],
    rng: &RngStream,
) -> Result<ChainTrace> {
    config.validate(data.len())?;
    let mut chain_rng = rng.substream(0);
    run_chain_on(model, data, config, init_theta, data.len(), 1.0, 0, config.iterations, &mut chain_rng, &mut None)
}

/// Inner driver shared with the distributed harness: runs steps
/// `[t_start, t_end)` of the schedule on `data`, with a stepsize scale and
/// an externally chosen gradient scale total.
pub(crate) fn run_chain_on(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    config: &SgldConfig,
    init_theta: &[f64],
    scale_total: usize,
    stepsize_scale: f64,
    t_start: usize,
    t_end: usize,
    rng: &mut RngStream,
    precond_state: &mut Option<Preconditioner>,
) -> Result<ChainTrace> {
    let mut theta = init_theta.to_vec();
    let mut trace = ChainTrace::default();
    for t in t_start..t_end {
        let eps = stepsize(t, config.a, config.b, config.gamma, config.eps_min) * stepsize_scale;
        let batch = sample_minibatch(data.len(), config.batch_size.min(data.len()), rng)?;
        if config.precondition && precond_state.is_none() && t >= config.precond_window {
            let grads: Vec<Vec<f64>> = batch
                .indices()
                .iter()
                .map(|&i| {
                    let (x, y) = data.row(i);
                    model.grad(x, y, &theta)
                })
                .collect::<Result<_>>()?;
            let c = empirical_fisher_preconditioner(&grads, config.ridge_tau)?;
            *precond_state = Some(Preconditioner::new(c)?);
        }
        theta = sgld_step(model, data, &theta, &batch, eps, scale_total, precond_state.as_ref(), Some(rng))?;
        if t >= config.burn_in {
            let mut step = ChainStep::sample(theta.clone());
            step.stepsize = Some(eps);
            step.n_used = Some(batch.len());
            trace.push(step);
        }
    }
    Ok(trace)
}
