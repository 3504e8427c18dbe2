//! Chain traces shared by the samplers.

/// One recorded sampler step.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub theta: Vec<f64>,
    pub stepsize: Option<f64>,
    pub accepted: Option<bool>,
    /// Data points consulted by the accept decision (austerity chains).
    pub n_used: Option<usize>,
    /// Estimated decision-error probability at decision time.
    pub error_estimate: Option<f64>,
    /// Simulator calls made during this step (ABC chains).
    pub sim_calls: Option<usize>,
    /// Decision was forced by the acquisition cap.
    pub forced: bool,
}

impl ChainStep {
    pub fn sample(theta: Vec<f64>) -> Self {
        Self {
            theta,
            stepsize: None,
            accepted: None,
            n_used: None,
            error_estimate: None,
            sim_calls: None,
            forced: false,
        }
    }
}

/// Ordered samples with per-step metadata, recorded after burn-in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainTrace {
    pub steps: Vec<ChainStep>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, step: ChainStep) {
        self.steps.push(step);
    }

    pub fn dim(&self) -> usize {
        self.steps.first().map_or(0, |s| s.theta.len())
    }

    /// Per-coordinate sample mean.
    pub fn sample_mean(&self) -> Vec<f64> {
        let p = self.dim();
        let mut m = vec![0.0; p];
        for s in &self.steps {
            for (mi, ti) in m.iter_mut().zip(&s.theta) {
                *mi += ti;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Per-coordinate sample variance (n-1 denominator).
    pub fn sample_variance(&self) -> Vec<f64> {
        let mean = self.sample_mean();
        let p = self.dim();
        let mut v = vec![0.0; p];
        for s in &self.steps {
            for j in 0..p {
                let d = s.theta[j] - mean[j];
                v[j] += d * d;
            }
        }
        let denom = (self.len().saturating_sub(1)).max(1) as f64;
        v.iter_mut().for_each(|x| *x /= denom);
        v
    }

    /// Total simulator calls recorded on the trace.
    pub fn total_sim_calls(&self) -> usize {
        self.steps.iter().filter_map(|s| s.sim_calls).sum()
    }
}
