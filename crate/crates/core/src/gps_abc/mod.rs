//! Likelihood-free MCMC: naive synthetic-likelihood Metropolis-Hastings and
//! the GP-surrogate variant that stores every simulation and requests new
//! ones only when the accept/reject decision is too uncertain.

mod gp;
mod simulator;

pub use gp::{GpHyper, SurrogateStore};
pub use simulator::{ExponentialRateSimulator, ExternalSimulator, GaussianLocationSimulator, Simulator};

use nalgebra::{DMatrix, DVector};

use crate::austerity::RandomWalkProposal;
use crate::numerics::{RngStream, SpdMatrix};
use crate::trace::{ChainStep, ChainTrace};
use crate::{Error, Result};

/// Independent Gaussian prior over the simulator parameters.
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GaussianPrior {
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.std)
            .zip(theta)
            .map(|((m, s), t)| -((t - m) / s).powi(2) / 2.0)
            .sum()
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        self.mean.iter().zip(&self.std).map(|(m, s)| m + s * rng.normal()).collect()
    }
}

/// Wood-style synthetic log-likelihood: fit a Gaussian through `s_count`
/// simulator draws at `theta` and evaluate the observed statistics under it.
pub fn synthetic_likelihood(
    theta: &[f64],
    s_count: usize,
    simulator: &dyn Simulator,
    rng: &mut RngStream,
    y: &[f64],
    ridge_tau: f64,
) -> Result<f64> {
    let k = simulator.stat_dim();
    if s_count < k + 2 {
        return Err(Error::InvalidConfig(format!("need at least {} simulations, got {s_count}", k + 2)));
    }
    let draws: Vec<Vec<f64>> = (0..s_count).map(|_| simulator.draw(theta, rng)).collect::<Result<_>>()?;
    let n = s_count as f64;
    let mut mean = DVector::zeros(k);
    for d in &draws {
        mean += DVector::from_row_slice(d);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(k, k);
    for d in &draws {
        let r = DVector::from_row_slice(d) - &mean;
        cov += &r * r.transpose();
    }
    cov /= n - 1.0;
    // absolute floor keeps a constant simulator finite (ridge on a zero
    // trace would stay zero)
    let floor = 1e-12;
    for i in 0..k {
        cov[(i, i)] += floor;
    }
    let spd = SpdMatrix::new(cov).map_err(|_| Error::DegenerateCovariance)?;
    gaussian_log_density(y, &mean, &spd, ridge_tau)
}

fn gaussian_log_density(y: &[f64], mean: &DVector<f64>, cov: &SpdMatrix, ridge_tau: f64) -> Result<f64> {
    let k = mean.len();
    let r = DVector::from_row_slice(y) - mean;
    let (x, _) = cov.solve(&r, ridge_tau).map_err(|_| Error::DegenerateCovariance)?;
    let logdet = cov.log_det(ridge_tau).map_err(|_| Error::DegenerateCovariance)?;
    Ok(-0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + r.dot(&x)))
}

#[derive(Debug, Clone)]
pub struct SlMhConfig {
    pub s_count: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub proposal_std: f64,
    /// Re-simulate the current endpoint every step instead of caching it.
    pub refresh_current: bool,
    pub ridge_tau: f64,
}

impl Default for SlMhConfig {
    fn default() -> Self {
        Self { s_count: 20, iterations: 1000, burn_in: 0, proposal_std: 0.3, refresh_current: false, ridge_tau: 1e-10 }
    }
}

/// Naive synthetic-likelihood MH: fresh simulations for every proposed
/// parameter value; per-step simulator-call counts recorded on the trace.
pub fn sl_mh_chain(
    simulator: &dyn Simulator,
    prior: &GaussianPrior,
    y: &[f64],
    config: &SlMhConfig,
    init_theta: &[f64],
    rng: &RngStream,
) -> Result<ChainTrace> {
    let proposal = RandomWalkProposal { std: config.proposal_std };
    let mut prop_rng = rng.substream(1);
    let mut u_rng = rng.substream(2);
    let mut sim_rng = rng.substream(3);
    let mut theta = init_theta.to_vec();
    let mut ll_cur = synthetic_likelihood(&theta, config.s_count, simulator, &mut sim_rng, y, config.ridge_tau)?;
    let mut trace = ChainTrace::default();
    for t in 0..config.iterations {
        let mut calls = 0usize;
        if config.refresh_current {
            ll_cur = synthetic_likelihood(&theta, config.s_count, simulator, &mut sim_rng, y, config.ridge_tau)?;
            calls += config.s_count;
        }
        let theta_p = proposal.propose(&theta, &mut prop_rng);
        let ll_prop = synthetic_likelihood(&theta_p, config.s_count, simulator, &mut sim_rng, y, config.ridge_tau)?;
        calls += config.s_count;
        let log_ratio = ll_prop + prior.log_density(&theta_p) - ll_cur - prior.log_density(&theta);
        let accept = u_rng.uniform_open().ln() < log_ratio;
        if accept {
            theta = theta_p;
            ll_cur = ll_prop;
        }
        if t >= config.burn_in {
            let mut step = ChainStep::sample(theta.clone());
            step.accepted = Some(accept);
            step.sim_calls = Some(calls);
            trace.push(step);
        }
    }
    Ok(trace)
}

/// Verdict of an uncertainty-aware surrogate MH decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcDecision {
    pub accept: bool,
    /// Disagreement fraction of the Monte Carlo verdicts.
    pub tau_hat: f64,
}

/// Either a confident verdict or a request for more simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UncertainOutcome {
    Decided(AbcDecision),
    NeedMoreSims { tau_hat: f64, majority_accept: bool },
}

/// Monte Carlo decision under surrogate uncertainty: draw `mc_rounds` joint
/// realizations of the latent statistic means at both endpoints, form the
/// synthetic-likelihood MH verdict for each, and emit the majority verdict
/// only when the disagreement fraction is at most `xi`.
#[allow(clippy::too_many_arguments)]
pub fn uncertain_mh_decision(
    store: &SurrogateStore,
    theta_t: &[f64],
    theta_p: &[f64],
    u: f64,
    log_prior_ratio: f64,
    xi: f64,
    mc_rounds: usize,
    rng: &mut RngStream,
    y: &[f64],
) -> Result<UncertainOutcome> {
    if !(xi > 0.0 && xi < 0.5) {
        return Err(Error::InvalidConfig("xi must lie in (0, 0.5)".into()));
    }
    if mc_rounds < 100 {
        return Err(Error::InvalidConfig("mc_rounds must be >= 100".into()));
    }
    let pred_t = store.predict(theta_t)?;
    let pred_p = store.predict(theta_p)?;
    let log_u = u.ln();
    let mut accepts = 0usize;
    for _ in 0..mc_rounds {
        let mut log_ratio = log_prior_ratio;
        for (d, (pt, pp)) in pred_t.iter().zip(&pred_p).enumerate() {
            let noise2 = store.hyper(d).noise * store.hyper(d).noise;
            let f_t = pt.mean + pt.latent_var.sqrt() * rng.normal();
            let f_p = pp.mean + pp.latent_var.sqrt() * rng.normal();
            // synthetic-likelihood ratio with the GP noise as observation cov
            let r_t = y[d] - f_t;
            let r_p = y[d] - f_p;
            log_ratio += (r_t * r_t - r_p * r_p) / (2.0 * noise2);
        }
        if log_u < log_ratio {
            accepts += 1;
        }
    }
    let acc_frac = accepts as f64 / mc_rounds as f64;
    let accept = acc_frac >= 0.5;
    let tau_hat = acc_frac.min(1.0 - acc_frac);
    if tau_hat <= xi {
        Ok(UncertainOutcome::Decided(AbcDecision { accept, tau_hat }))
    } else {
        Ok(UncertainOutcome::NeedMoreSims { tau_hat, majority_accept: accept })
    }
}

/// Run `batch` simulations at whichever endpoint has the larger average
/// surrogate variance (ties go to the proposal) and append them to the
/// store. Returns the simulator calls spent.
pub fn acquire(
    store: &mut SurrogateStore,
    theta_t: &[f64],
    theta_p: &[f64],
    simulator: &dyn Simulator,
    batch: usize,
    rng: &mut RngStream,
) -> Result<usize> {
    let avg_var = |pred: &[gp::Prediction]| pred.iter().map(|p| p.latent_var).sum::<f64>() / pred.len() as f64;
    let var_t = avg_var(&store.predict(theta_t)?);
    let var_p = avg_var(&store.predict(theta_p)?);
    let target: &[f64] = if var_t > var_p { theta_t } else { theta_p };
    for _ in 0..batch {
        let stat = simulator.draw(target, rng)?;
        store.append(target, &stat)?;
    }
    Ok(batch)
}

#[derive(Debug, Clone)]
pub struct GpsAbcConfig {
    pub xi: f64,
    pub mc_rounds: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub proposal_std: f64,
    /// Prior draws used to seed the store before the chain starts.
    pub init_points: usize,
    /// Simulations per initialization point.
    pub init_sims: usize,
    /// Simulations per acquisition request.
    pub acquire_batch: usize,
    /// Acquisition rounds per step before the decision is forced.
    pub max_acquisitions: usize,
}

impl Default for GpsAbcConfig {
    fn default() -> Self {
        Self {
            xi: 0.3,
            mc_rounds: 200,
            iterations: 1000,
            burn_in: 0,
            proposal_std: 0.3,
            init_points: 10,
            init_sims: 5,
            acquire_batch: 5,
            max_acquisitions: 20,
        }
    }
}

/// The GP-surrogate ABC chain. Per step: propose, then alternate
/// uncertainty-checked decisions with acquisitions until a verdict is
/// confident (or the acquisition cap forces the current majority, flagged
/// on the trace). Returns the trace and the final store.
pub fn gps_abc_chain(
    simulator: &dyn Simulator,
    prior: &GaussianPrior,
    y: &[f64],
    config: &GpsAbcConfig,
    init_theta: &[f64],
    rng: &RngStream,
) -> Result<(ChainTrace, SurrogateStore)> {
    let mut prop_rng = rng.substream(1);
    let mut u_rng = rng.substream(2);
    let mut sim_rng = rng.substream(3);
    let mut mc_rng = rng.substream(4);

    // seed the store with prior-drawn parameter values
    let mut init_inputs = Vec::new();
    let mut init_targets = Vec::new();
    for _ in 0..config.init_points {
        let th = prior.sample(&mut prop_rng);
        for _ in 0..config.init_sims {
            let stat = simulator.draw(&th, &mut sim_rng)?;
            init_inputs.push(th.clone());
            init_targets.push(stat);
        }
    }
    let init_calls = init_inputs.len();
    let hyper = gp::median_heuristic_hyper(&init_inputs, &init_targets, config.init_sims);
    let mut store = SurrogateStore::new(hyper)?;
    for (th, stat) in init_inputs.iter().zip(&init_targets) {
        store.append(th, stat)?;
    }

    let proposal = RandomWalkProposal { std: config.proposal_std };
    let mut theta = init_theta.to_vec();
    let mut trace = ChainTrace::default();
    for t in 0..config.iterations {
        let theta_p = proposal.propose(&theta, &mut prop_rng);
        let u = u_rng.uniform_open();
        let log_prior_ratio = prior.log_density(&theta_p) - prior.log_density(&theta);
        let mut calls = if t == 0 { init_calls } else { 0 };
        let mut forced = false;
        let mut acquisitions = 0usize;
        let decision = loop {
            match uncertain_mh_decision(
                &store,
                &theta,
                &theta_p,
                u,
                log_prior_ratio,
                config.xi,
                config.mc_rounds,
                &mut mc_rng,
                y,
            )? {
                UncertainOutcome::Decided(d) => break d,
                UncertainOutcome::NeedMoreSims { tau_hat, majority_accept } => {
                    if acquisitions >= config.max_acquisitions {
                        // cap reached: force the current majority verdict
                        forced = true;
                        break AbcDecision { accept: majority_accept, tau_hat };
                    }
                    calls += acquire(&mut store, &theta, &theta_p, simulator, config.acquire_batch, &mut sim_rng)?;
                    acquisitions += 1;
                }
            }
        };
        if decision.accept {
            theta = theta_p;
        }
        if t >= config.burn_in {
            let mut step = ChainStep::sample(theta.clone());
            step.accepted = Some(decision.accept);
            step.error_estimate = Some(decision.tau_hat);
            step.sim_calls = Some(calls);
            step.forced = forced;
            trace.push(step);
        }
    }
    Ok((trace, store))
}

/// Posterior predictive sampling: thin the chain, run the simulator at each
/// kept parameter value, and pool the outputs.
pub fn posterior_predictive(
    chain: &ChainTrace,
    simulator: &dyn Simulator,
    thin: usize,
    draws_per_sample: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<f64>>> {
    if chain.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if thin == 0 || thin > chain.len() {
        return Err(Error::InvalidConfig(format!("thin {thin} out of range for chain of {}", chain.len())));
    }
    let mut out = Vec::new();
    for step in chain.steps.iter().step_by(thin) {
        for _ in 0..draws_per_sample {
            out.push(simulator.draw(&step.theta, rng)?);
        }
    }
    Ok(out)
}

/// Empirical quantiles of one pooled predictive dimension.
pub fn quantiles(values: &mut [f64], probs: &[f64]) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probs
        .iter()
        .map(|&p| {
            let idx = ((values.len() - 1) as f64 * p).round() as usize;
            values[idx]
        })
        .collect()
}
