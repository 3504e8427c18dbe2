//! Gradient-ascent training whose minibatch grows, and whose termination
//! fires, according to the LSNR stopping criterion.

use crate::lsnr::{gradient_moments, lsnr_report, LsnrConfig, LsnrReport};
use crate::models::{mean_objective, sample_minibatch, Dataset, ObjectiveModel};
use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub initial_batch: usize,
    /// Batch multiplier applied when the criterion fires below n = N.
    pub growth_factor: f64,
    /// Fixed ascent stepsize.
    pub stepsize: f64,
    pub max_iterations: usize,
    /// LSNR check cadence in iterations.
    pub check_period: usize,
    pub lsnr: LsnrConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_batch: 100,
            growth_factor: 2.0,
            stepsize: 0.5,
            max_iterations: 10_000,
            check_period: 1,
            lsnr: LsnrConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_batch < 2 {
            return Err(Error::InvalidConfig("initial batch must be >= 2".into()));
        }
        if self.growth_factor <= 1.0 {
            return Err(Error::InvalidConfig("growth factor must exceed 1".into()));
        }
        if !(self.lsnr.delta > 0.0 && self.lsnr.delta < 1.0) {
            return Err(Error::InvalidConfig("delta must lie in (0,1)".into()));
        }
        if self.check_period == 0 {
            return Err(Error::InvalidConfig("check period must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Criterion fired with the batch already at n = N.
    LsnrExhausted,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::LsnrExhausted => "lsnr-exhausted",
            StopReason::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub iteration: usize,
    pub batch_size: usize,
    /// Full-data mean objective at the pre-update theta.
    pub objective: f64,
    pub report: Option<LsnrReport>,
}

#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub records: Vec<TrainRecord>,
    pub final_theta: Vec<f64>,
    pub reason: StopReason,
}

/// Next batch size: `min(ceil(factor * n), cap)`. At `n = cap` the value is
/// the fixed point `cap` and the caller must treat the data as exhausted.
pub fn batch_growth_policy(n: usize, cap: usize, factor: f64) -> usize {
    (((n as f64) * factor).ceil() as usize).min(cap)
}

/// Train by gradient ascent on a fixed stage minibatch, checking the LSNR
/// criterion every `check_period` iterations. When it fires with n < N the
/// batch grows by drawing additional indices (superset growth); when it
/// fires at n = N training terminates.
pub fn train(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    config: &TrainConfig,
    init_theta: &[f64],
    rng: &mut RngStream,
) -> Result<TrainTrace> {
    config.validate()?;
    let n_total = data.len();
    let n0 = config.initial_batch.min(n_total);
    let mut batch = sample_minibatch(n_total, n0, rng)?;
    let mut theta = init_theta.to_vec();
    let all: Vec<usize> = (0..n_total).collect();

    let mut records = Vec::new();
    let mut reason = StopReason::MaxIterations;
    for t in 0..config.max_iterations {
        let moments = gradient_moments(model, data, &batch, &theta)?;
        let objective = mean_objective(model, data, &all, &theta)?;
        let report = if t % config.check_period == 0 {
            Some(lsnr_report(&moments, &config.lsnr)?)
        } else {
            None
        };
        records.push(TrainRecord { iteration: t, batch_size: batch.len(), objective, report });

        if let Some(r) = report {
            if r.stop {
                if batch.len() >= n_total {
                    reason = StopReason::LsnrExhausted;
                    break;
                }
                let next = batch_growth_policy(batch.len(), n_total, config.growth_factor);
                batch.grow(n_total, next - batch.len(), rng)?;
                continue; // recompute moments on the grown batch before updating
            }
        }

        for (ti, gi) in theta.iter_mut().zip(moments.mean.iter()) {
            *ti += config.stepsize * gi;
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
    }
    Ok(TrainTrace { records, final_theta: theta, reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{synthetic::gaussian_dataset, GaussianMeanModel};

    #[test]
    fn growth_policy_cases() {
        assert_eq!(batch_growth_policy(100, 3681, 2.0), 200);
        assert_eq!(batch_growth_policy(3000, 3681, 2.0), 3681);
        assert_eq!(batch_growth_policy(3681, 3681, 2.0), 3681);
    }

    fn small_gaussian_setup() -> (GaussianMeanModel, Dataset) {
        let model = GaussianMeanModel::new(1.0, 0.0, 100.0).unwrap();
        let data = gaussian_dataset(200, 5.0, 1.0, &mut RngStream::new(3, 7));
        (model, data)
    }

    #[test]
    fn far_from_mean_keeps_updating() {
        let (model, data) = small_gaussian_setup();
        let cfg = TrainConfig { initial_batch: 10, stepsize: 0.05, max_iterations: 3, ..Default::default() };
        let trace = train(&model, &data, &cfg, &[-50.0], &mut RngStream::new(1, 0)).unwrap();
        // LSNR huge far from the mean: no stop, theta moved toward the data
        assert_eq!(trace.reason, StopReason::MaxIterations);
        assert!(!trace.records[0].report.unwrap().stop);
        assert!(trace.final_theta[0] > -50.0);
    }

    #[test]
    fn at_mean_with_full_batch_terminates_immediately() {
        let (model, data) = small_gaussian_setup();
        let sample_mean: f64 = (0..data.len()).map(|i| data.row(i).0[0]).sum::<f64>() / data.len() as f64;
        let cfg = TrainConfig { initial_batch: data.len(), stepsize: 0.05, max_iterations: 100, ..Default::default() };
        let trace = train(&model, &data, &cfg, &[sample_mean], &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(trace.reason, StopReason::LsnrExhausted);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn batch_sizes_nondecreasing_and_capped() {
        let (model, data) = small_gaussian_setup();
        let cfg = TrainConfig { initial_batch: 4, stepsize: 0.2, max_iterations: 5000, ..Default::default() };
        let trace = train(&model, &data, &cfg, &[-10.0], &mut RngStream::new(2, 0)).unwrap();
        let sizes: Vec<usize> = trace.records.iter().map(|r| r.batch_size).collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        assert!(*sizes.last().unwrap() <= data.len());
        assert_eq!(trace.reason, StopReason::LsnrExhausted);
    }

    #[test]
    fn objective_nondecreasing_with_small_stepsize() {
        // strictly concave objective, full batch, small stepsize
        let (model, data) = small_gaussian_setup();
        let cfg = TrainConfig {
            initial_batch: data.len(),
            stepsize: 0.05,
            max_iterations: 200,
            ..Default::default()
        };
        let trace = train(&model, &data, &cfg, &[-3.0], &mut RngStream::new(4, 0)).unwrap();
        let objs: Vec<f64> = trace.records.iter().map(|r| r.objective).collect();
        assert!(objs.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn stage_batch_fixed_between_growth_events() {
        let (model, data) = small_gaussian_setup();
        let cfg = TrainConfig { initial_batch: 10, stepsize: 0.05, max_iterations: 50, check_period: 10, ..Default::default() };
        let trace = train(&model, &data, &cfg, &[-20.0], &mut RngStream::new(5, 0)).unwrap();
        // within a stretch of constant batch size nothing was resampled:
        // size changes only at check iterations
        for w in trace.records.windows(2) {
            if w[0].batch_size != w[1].batch_size {
                assert_eq!(w[1].iteration % cfg.check_period, 0);
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = TrainConfig { growth_factor: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig { initial_batch: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
