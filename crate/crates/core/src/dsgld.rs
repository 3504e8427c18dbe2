//! Distributed SGLD over disjoint data shards: chains hop between workers
//! each simulated round, step counts follow worker speed, and slower
//! workers are compensated through the stepsize schedule so no shard is
//! over-represented.

use rand::Rng;

use crate::models::{Dataset, ObjectiveModel};
use crate::numerics::RngStream;
use crate::sgld::{run_chain_on, Preconditioner, SgldConfig};
use crate::trace::ChainTrace;
use crate::{Error, Result};

/// One worker: a contiguous shard of the dataset and a relative speed
/// (steps per unit of simulated time).
#[derive(Debug, Clone)]
pub struct WorkerSpec {
    pub shard_start: usize,
    pub shard_end: usize,
    pub speed: f64,
}

/// Simulated-time schedule: each round lasts `round_length` time units and
/// a worker completes `floor(speed * round_length)` updates per round.
#[derive(Debug, Clone, Copy)]
pub struct SimSchedule {
    pub round_length: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone)]
pub struct DsgldConfig {
    pub sgld: SgldConfig,
    pub schedule: SimSchedule,
    /// Rescale stepsizes by update counts and use the global dataset size
    /// in the gradient. Off means every worker pretends its shard is the
    /// whole dataset.
    pub compensate: bool,
    /// Number of parallel chains; defaults to one per worker when zero.
    pub chains: usize,
}

/// Log entry for one (round, chain) segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundEvent {
    pub round: usize,
    pub chain: usize,
    pub worker: usize,
    pub steps: usize,
    pub stepsize_scale: f64,
}

#[derive(Debug)]
pub struct DsgldResult {
    pub traces: Vec<ChainTrace>,
    pub events: Vec<RoundEvent>,
}

const STREAM_SCHEDULER: u64 = 1 << 62;

fn steps_per_round(speed: f64, round_length: f64) -> usize {
    (speed * round_length).floor() as usize
}

/// Per-worker stepsize scales: the slowest worker keeps scale 1 and faster
/// workers shrink in proportion, so speeds (2, 1) give scales (0.5, 1).
pub fn compensation_scales(speeds: &[f64], round_length: f64) -> Result<Vec<f64>> {
    let steps: Vec<usize> = speeds.iter().map(|&s| steps_per_round(s, round_length)).collect();
    if steps.iter().any(|&s| s == 0) {
        return Err(Error::InvalidConfig("every worker needs at least one step per round".into()));
    }
    let min = *steps.iter().min().expect("nonempty") as f64;
    Ok(steps.iter().map(|&s| min / s as f64).collect())
}

fn validate_workers(workers: &[WorkerSpec], n_total: usize) -> Result<()> {
    if workers.is_empty() {
        return Err(Error::InvalidConfig("need at least one worker".into()));
    }
    for (i, w) in workers.iter().enumerate() {
        if w.shard_start >= w.shard_end {
            return Err(Error::EmptyShard(i));
        }
        if !(w.speed > 0.0 && w.speed.is_finite()) {
            return Err(Error::InvalidConfig("worker speed must be positive".into()));
        }
    }
    // shards must tile 0..N exactly, no gaps or overlaps
    let mut order: Vec<&WorkerSpec> = workers.iter().collect();
    order.sort_by_key(|w| w.shard_start);
    let mut cursor = 0;
    for w in &order {
        if w.shard_start != cursor {
            return Err(Error::BadPartition);
        }
        cursor = w.shard_end;
    }
    if cursor != n_total {
        return Err(Error::BadPartition);
    }
    Ok(())
}

/// Run the distributed harness. Chain `c` draws from `rng.substream(c)`;
/// handoffs draw from a dedicated scheduler substream in chain order, so a
/// single-worker setup reproduces the sequential sampler bit for bit.
pub fn run_dsgld(
    model: &dyn ObjectiveModel,
    data: &Dataset,
    workers: &[WorkerSpec],
    config: &DsgldConfig,
    init_theta: &[f64],
    rng: &RngStream,
) -> Result<DsgldResult> {
    validate_workers(workers, data.len())?;
    if config.schedule.rounds == 0 || config.schedule.round_length <= 0.0 {
        return Err(Error::InvalidConfig("need rounds >= 1 and round_length > 0".into()));
    }
    let speeds: Vec<f64> = workers.iter().map(|w| w.speed).collect();
    let scales = compensation_scales(&speeds, config.schedule.round_length)?;
    let shards: Vec<Dataset> = workers.iter().map(|w| data.slice_range(w.shard_start, w.shard_end)).collect::<Result<_>>()?;
    for shard in &shards {
        config.sgld.validate(shard.len())?;
    }

    let n_chains = if config.chains == 0 { workers.len() } else { config.chains };
    let mut chain_rngs: Vec<RngStream> = (0..n_chains as u64).map(|c| rng.substream(c)).collect();
    let mut scheduler = rng.substream(STREAM_SCHEDULER);
    // chains start spread across workers round-robin
    let mut location: Vec<usize> = (0..n_chains).map(|c| c % workers.len()).collect();
    let mut thetas: Vec<Vec<f64>> = vec![init_theta.to_vec(); n_chains];
    let mut clocks: Vec<usize> = vec![0; n_chains];
    let mut precond: Vec<Option<Preconditioner>> = (0..n_chains).map(|_| None).collect();
    let mut traces: Vec<ChainTrace> = (0..n_chains).map(|_| ChainTrace::default()).collect();
    let mut events = Vec::new();

    for round in 0..config.schedule.rounds {
        for c in 0..n_chains {
            let w = location[c];
            let steps = steps_per_round(workers[w].speed, config.schedule.round_length);
            let (scale_total, stepsize_scale) = if config.compensate {
                (data.len(), scales[w])
            } else {
                (shards[w].len(), 1.0)
            };
            let t0 = clocks[c];
            let segment = run_chain_on(
                model,
                &shards[w],
                &config.sgld,
                &thetas[c],
                scale_total,
                stepsize_scale,
                t0,
                t0 + steps,
                &mut chain_rngs[c],
                &mut precond[c],
            )?;
            if let Some(last) = segment.steps.last() {
                thetas[c] = last.theta.clone();
            }
            clocks[c] = t0 + steps;
            for step in segment.steps {
                traces[c].push(step);
            }
            events.push(RoundEvent { round, chain: c, worker: w, steps, stepsize_scale });
        }
        // handoff: each chain moves to a uniformly chosen other worker
        if workers.len() > 1 {
            for loc in location.iter_mut() {
                let mut next = scheduler.random_range(0..workers.len() - 1);
                if next >= *loc {
                    next += 1;
                }
                *loc = next;
            }
        }
    }
    Ok(DsgldResult { traces, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{synthetic::gaussian_dataset, GaussianMeanModel};
    use crate::sgld::run_sgld;

    fn base_config(rounds: usize, round_length: f64) -> DsgldConfig {
        DsgldConfig {
            sgld: SgldConfig { batch_size: 5, ..Default::default() },
            schedule: SimSchedule { round_length, rounds },
            compensate: true,
            chains: 0,
        }
    }

    #[test]
    fn compensation_scale_examples() {
        assert_eq!(compensation_scales(&[2.0, 1.0], 1.0).unwrap(), vec![0.5, 1.0]);
        assert_eq!(compensation_scales(&[3.0, 3.0, 3.0], 1.0).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(compensation_scales(&[5.0], 2.0).unwrap(), vec![1.0]);
        assert!(matches!(compensation_scales(&[0.5, 1.0], 1.0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn partition_validation() {
        let data = gaussian_dataset(10, 0.0, 1.0, &mut RngStream::new(1, 0));
        let model = GaussianMeanModel::new(1.0, 0.0, 1.0).unwrap();
        let cfg = base_config(1, 5.0);
        let bad = |workers: Vec<WorkerSpec>| {
            run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(1, 0))
        };
        let w = |s, e| WorkerSpec { shard_start: s, shard_end: e, speed: 1.0 };
        assert!(matches!(bad(vec![w(0, 5), w(4, 10)]), Err(Error::BadPartition)));
        assert!(matches!(bad(vec![w(0, 4), w(5, 10)]), Err(Error::BadPartition)));
        assert!(matches!(bad(vec![w(0, 8)]), Err(Error::BadPartition)));
        assert!(matches!(bad(vec![w(0, 5), w(5, 5)]), Err(Error::EmptyShard(1))));
        assert!(matches!(bad(vec![]), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn single_worker_reduces_to_sequential_sampler() {
        let data = gaussian_dataset(40, 1.0, 1.0, &mut RngStream::new(2, 0));
        let model = GaussianMeanModel::new(1.0, 0.0, 10.0).unwrap();
        let cfg = base_config(5, 30.0); // 5 rounds x 30 steps
        let workers = vec![WorkerSpec { shard_start: 0, shard_end: 40, speed: 1.0 }];
        let dist = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(7, 0)).unwrap();
        let seq_cfg = SgldConfig { iterations: 150, ..cfg.sgld };
        let seq = run_sgld(&model, &data, &seq_cfg, &[0.0], &RngStream::new(7, 0)).unwrap();
        assert_eq!(dist.traces.len(), 1);
        assert_eq!(dist.traces[0], seq);
    }

    #[test]
    fn seed_replay_identical() {
        let data = gaussian_dataset(60, 1.0, 1.0, &mut RngStream::new(3, 0));
        let model = GaussianMeanModel::new(1.0, 0.0, 10.0).unwrap();
        let cfg = base_config(10, 10.0);
        let workers = vec![
            WorkerSpec { shard_start: 0, shard_end: 30, speed: 2.0 },
            WorkerSpec { shard_start: 30, shard_end: 60, speed: 1.0 },
        ];
        let a = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(9, 0)).unwrap();
        let b = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(9, 0)).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.events, b.events);
        let c = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(10, 0)).unwrap();
        assert_ne!(a.traces, c.traces);
    }

    #[test]
    fn event_log_accounts_for_every_step() {
        let data = gaussian_dataset(60, 1.0, 1.0, &mut RngStream::new(4, 0));
        let model = GaussianMeanModel::new(1.0, 0.0, 10.0).unwrap();
        let cfg = base_config(8, 7.0);
        let workers = vec![
            WorkerSpec { shard_start: 0, shard_end: 20, speed: 1.5 },
            WorkerSpec { shard_start: 20, shard_end: 60, speed: 1.0 },
        ];
        let out = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(5, 0)).unwrap();
        assert_eq!(out.events.len(), 8 * 2);
        for c in 0..2 {
            let logged: usize = out.events.iter().filter(|e| e.chain == c).map(|e| e.steps).sum();
            assert_eq!(logged, out.traces[c].len());
        }
        // fast worker does 10 steps per round at half scale, slow does 7 at 1
        for e in &out.events {
            match e.worker {
                0 => {
                    assert_eq!(e.steps, 10);
                    assert_eq!(e.stepsize_scale, 0.7);
                }
                _ => {
                    assert_eq!(e.steps, 7);
                    assert_eq!(e.stepsize_scale, 1.0);
                }
            }
        }
        // handoffs happen: every chain visits both workers
        for c in 0..2 {
            let visited: std::collections::HashSet<usize> =
                out.events.iter().filter(|e| e.chain == c).map(|e| e.worker).collect();
            assert_eq!(visited.len(), 2);
        }
    }

    #[test]
    fn compensation_removes_shard_bias() {
        // tight prior at 0, data centered at 2, shards 80/20: pretending a
        // shard is the whole dataset underweights the data, so the naive
        // posterior mean sags toward the prior
        let data = gaussian_dataset(100, 2.0, 1.0, &mut RngStream::new(6, 0));
        let model = GaussianMeanModel::new(1.0, 0.0, 0.1).unwrap();
        let xbar: f64 = (0..100).map(|i| data.row(i).0[0]).sum::<f64>() / 100.0;
        let analytic = 100.0 * xbar / (1.0 / 0.1 + 100.0);
        let workers = vec![
            WorkerSpec { shard_start: 0, shard_end: 80, speed: 1.0 },
            WorkerSpec { shard_start: 80, shard_end: 100, speed: 1.0 },
        ];
        let mut cfg = base_config(400, 20.0);
        cfg.sgld = SgldConfig { a: 2e-3, gamma: 0.6, eps_min: 2e-4, batch_size: 10, burn_in: 2000, ..Default::default() };
        let comp = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(11, 0)).unwrap();
        cfg.compensate = false;
        let naive = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(11, 0)).unwrap();
        let pooled_mean = |r: &DsgldResult| {
            let (mut acc, mut n) = (0.0, 0.0);
            for t in &r.traces {
                for s in &t.steps {
                    acc += s.theta[0];
                    n += 1.0;
                }
            }
            acc / n
        };
        let err_comp = (pooled_mean(&comp) - analytic).abs();
        let err_naive = (pooled_mean(&naive) - analytic).abs();
        assert!(err_comp < 0.1, "compensated err {err_comp}");
        assert!(err_naive > 2.0 * err_comp, "comp {err_comp} naive {err_naive}");
        assert!(pooled_mean(&naive) < analytic);
    }

    #[test]
    fn chain_count_override() {
        let data = gaussian_dataset(40, 1.0, 1.0, &mut RngStream::new(8, 0));
        let model = GaussianMeanModel::new(1.0, 0.0, 10.0).unwrap();
        let mut cfg = base_config(3, 10.0);
        cfg.chains = 5;
        let workers = vec![
            WorkerSpec { shard_start: 0, shard_end: 20, speed: 1.0 },
            WorkerSpec { shard_start: 20, shard_end: 40, speed: 1.0 },
        ];
        let out = run_dsgld(&model, &data, &workers, &cfg, &[0.0], &RngStream::new(12, 0)).unwrap();
        assert_eq!(out.traces.len(), 5);
        assert!(out.traces.iter().all(|t| t.len() == 30));
    }
}
