//! Per-dimension Gaussian process regression over parameter space with a
//! squared-exponential kernel. The store is append-only; every append
//! extends the Cholesky factor by one row instead of refactorizing.

use crate::{Error, Result};

/// Fixed kernel hyperparameters for one statistic dimension. Learning them
/// is out of scope; defaults come from a median heuristic over the
/// initialization simulations.
#[derive(Debug, Clone, Copy)]
pub struct GpHyper {
    pub lengthscale: f64,
    pub amplitude: f64,
    pub noise: f64,
    /// Constant prior mean the posterior reverts to far from data.
    pub prior_mean: f64,
}

impl GpHyper {
    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        self.amplitude * self.amplitude * (-d2 / (2.0 * self.lengthscale * self.lengthscale)).exp()
    }
}

/// Posterior at a query point for one statistic dimension.
#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    pub mean: f64,
    /// Latent-function variance (no observation noise).
    pub latent_var: f64,
    /// Observation variance: latent plus noise.
    pub var: f64,
}

/// Lower-triangular factor in packed row-major storage; appending an
/// observation pushes one row without copying the existing factor.
#[derive(Default)]
struct PackedLower {
    /// Row i occupies entries [i(i+1)/2, i(i+1)/2 + i].
    data: Vec<f64>,
    n: usize,
}

impl PackedLower {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (i + 1) / 2 + j]
    }

    fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n + 1);
        self.data.extend_from_slice(row);
        self.n += 1;
    }

    /// Solve L w = b in place.
    fn forward_solve(&self, b: &mut [f64]) {
        for i in 0..b.len() {
            let base = i * (i + 1) / 2;
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.data[base + j] * b[j];
            }
            b[i] = acc / self.data[base + i];
        }
    }

    /// Solve L' w = b in place.
    fn back_solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in (i + 1)..n {
                acc -= self.at(j, i) * b[j];
            }
            b[i] = acc / self.at(i, i);
        }
    }
}

struct GpDim {
    hyper: GpHyper,
    /// Lower Cholesky factor of K + noise^2 I, grown row by row.
    l: PackedLower,
    /// (K + noise^2 I)^{-1} (y - prior_mean).
    alpha: Vec<f64>,
    targets: Vec<f64>,
}

/// All (theta, simulated statistic) pairs ever seen plus the per-dimension
/// GP posterior state.
pub struct SurrogateStore {
    inputs: Vec<Vec<f64>>,
    dims: Vec<GpDim>,
}

impl SurrogateStore {
    pub fn new(hyper: Vec<GpHyper>) -> Result<Self> {
        if hyper.is_empty() {
            return Err(Error::InvalidConfig("need at least one statistic dimension".into()));
        }
        for h in &hyper {
            if h.lengthscale <= 0.0 || h.amplitude <= 0.0 || h.noise <= 0.0 {
                return Err(Error::InvalidConfig("GP hyperparameters must be positive".into()));
            }
        }
        let dims = hyper
            .into_iter()
            .map(|hyper| GpDim { hyper, l: PackedLower::default(), alpha: Vec::new(), targets: Vec::new() })
            .collect();
        Ok(Self { inputs: Vec::new(), dims })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn stat_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn hyper(&self, dim: usize) -> &GpHyper {
        &self.dims[dim].hyper
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn target(&self, point: usize, dim: usize) -> f64 {
        self.dims[dim].targets[point]
    }

    /// Append one (theta, statistic vector) observation, extending each
    /// dimension's Cholesky factor by one row.
    pub fn append(&mut self, theta: &[f64], stats: &[f64]) -> Result<()> {
        if stats.len() != self.dims.len() {
            return Err(Error::DimensionMismatch { expected: self.dims.len(), got: stats.len() });
        }
        for (d, dim) in self.dims.iter_mut().enumerate() {
            let h = dim.hyper;
            let kxx = h.amplitude * h.amplitude + h.noise * h.noise;
            // w = L^{-1} k, then the new diagonal entry sqrt(kxx - |w|^2)
            let mut w: Vec<f64> = self.inputs.iter().map(|xi| h.kernel(xi, theta)).collect();
            dim.l.forward_solve(&mut w);
            let w2: f64 = w.iter().map(|v| v * v).sum();
            let mut d2 = kxx - w2;
            if d2 <= 0.0 {
                for exp in -10..=-4 {
                    let jitter = 10f64.powi(exp) * kxx;
                    if kxx - w2 + jitter > 0.0 {
                        d2 = kxx - w2 + jitter;
                        break;
                    }
                }
                if d2 <= 0.0 {
                    return Err(Error::IllConditionedKernel);
                }
            }
            w.push(d2.sqrt());
            dim.l.push_row(&w);
            dim.targets.push(stats[d]);
            // refresh alpha = (K + s^2 I)^{-1} (y - prior_mean) via two
            // triangular solves against the extended factor
            let mut z: Vec<f64> = dim.targets.iter().map(|&t| t - h.prior_mean).collect();
            dim.l.forward_solve(&mut z);
            dim.l.back_solve(&mut z);
            dim.alpha = z;
        }
        self.inputs.push(theta.to_vec());
        Ok(())
    }

    /// GP posterior mean and variance at a query point, per dimension.
    pub fn predict(&self, theta: &[f64]) -> Result<Vec<Prediction>> {
        if self.is_empty() {
            return Err(Error::InvalidConfig("surrogate store is empty".into()));
        }
        let mut out = Vec::with_capacity(self.dims.len());
        for dim in &self.dims {
            let h = dim.hyper;
            let k: Vec<f64> = self.inputs.iter().map(|xi| h.kernel(xi, theta)).collect();
            let mean = h.prior_mean + k.iter().zip(&dim.alpha).map(|(a, b)| a * b).sum::<f64>();
            let mut v = k;
            dim.l.forward_solve(&mut v);
            let v2: f64 = v.iter().map(|x| x * x).sum();
            let latent = (h.amplitude * h.amplitude - v2).max(1e-12 * h.amplitude * h.amplitude);
            out.push(Prediction { mean, latent_var: latent, var: latent + h.noise * h.noise });
        }
        Ok(out)
    }
}

/// Hyperparameters from initialization simulations: lengthscale by the
/// median pairwise input distance, noise by the pooled within-point spread,
/// amplitude by the spread of per-point means.
pub fn median_heuristic_hyper(inputs: &[Vec<f64>], targets: &[Vec<f64>], sims_per_point: usize) -> Vec<GpHyper> {
    let k = targets.first().map_or(1, |t| t.len());
    let mut d2s: Vec<f64> = Vec::new();
    for (i, a) in inputs.iter().enumerate() {
        for b in inputs.iter().skip(i + 1) {
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
            if d2 > 0.0 {
                d2s.push(d2);
            }
        }
    }
    d2s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lengthscale = if d2s.is_empty() { 1.0 } else { d2s[d2s.len() / 2].sqrt().max(1e-6) };

    (0..k)
        .map(|d| {
            let vals: Vec<f64> = targets.iter().map(|t| t[d]).collect();
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let var: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len().max(2) as f64;
            // within-point spread when replicates exist, else a fraction of
            // the total spread
            let noise = if sims_per_point > 1 {
                let groups = vals.chunks(sims_per_point);
                let mut acc = 0.0;
                let mut cnt = 0.0;
                for g in groups {
                    if g.len() < 2 {
                        continue;
                    }
                    let gm: f64 = g.iter().sum::<f64>() / g.len() as f64;
                    acc += g.iter().map(|v| (v - gm).powi(2)).sum::<f64>() / (g.len() - 1) as f64;
                    cnt += 1.0;
                }
                if cnt > 0.0 {
                    (acc / cnt).sqrt().max(1e-6)
                } else {
                    (var.sqrt() * 0.3).max(1e-6)
                }
            } else {
                (var.sqrt() * 0.3).max(1e-6)
            };
            let amplitude = (var.sqrt()).max(noise);
            GpHyper { lengthscale, amplitude, noise, prior_mean: mean }
        })
        .collect()
}
