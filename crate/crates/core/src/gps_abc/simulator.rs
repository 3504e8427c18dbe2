//! Forward simulators producing summary statistics from parameters, plus a
//! wrapper around an external child process.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use rand_distr::{Distribution, Exp};

use crate::numerics::RngStream;
use crate::{Error, Result};

/// A stochastic forward model mapping parameters to a summary statistic
/// vector of fixed dimension.
pub trait Simulator {
    fn stat_dim(&self) -> usize;
    fn draw(&self, theta: &[f64], rng: &mut RngStream) -> Result<Vec<f64>>;
}

/// Statistic is a single noisy observation around the first parameter.
#[derive(Debug, Clone, Copy)]
pub struct GaussianLocationSimulator {
    pub noise_std: f64,
}

impl Simulator for GaussianLocationSimulator {
    fn stat_dim(&self) -> usize {
        1
    }

    fn draw(&self, theta: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        if theta.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        Ok(vec![theta[0] + self.noise_std * rng.normal()])
    }
}

/// Statistic is the mean of `inner_draws` exponential variates with rate
/// equal to the first parameter. Rates must be positive.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialRateSimulator {
    pub inner_draws: usize,
}

impl Simulator for ExponentialRateSimulator {
    fn stat_dim(&self) -> usize {
        1
    }

    fn draw(&self, theta: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        let rate = *theta.first().ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::SimulatorFailed(format!("nonpositive rate {rate}")));
        }
        let exp = Exp::new(rate).map_err(|e| Error::SimulatorFailed(e.to_string()))?;
        let n = self.inner_draws.max(1);
        let mean = (0..n).map(|_| exp.sample(rng)).sum::<f64>() / n as f64;
        Ok(vec![mean])
    }
}

/// Runs a child process per draw. Protocol: one line of space-separated
/// parameter values on stdin, one line of space-separated statistics on
/// stdout, exit code zero.
pub struct ExternalSimulator {
    pub program: String,
    pub args: Vec<String>,
    pub stat_dim: usize,
}

impl Simulator for ExternalSimulator {
    fn stat_dim(&self) -> usize {
        self.stat_dim
    }

    fn draw(&self, theta: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        // child owns its own randomness; we pass a seed argument derived
        // from our stream so repeated draws differ deterministically
        let seed: u64 = rng.uniform_open().to_bits();
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .env("SIM_SEED", seed.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        let mut child = cmd.spawn().map_err(|e| Error::SimulatorFailed(format!("spawn {}: {e}", self.program)))?;
        {
            let stdin = child.stdin.as_mut().expect("piped stdin");
            let line: Vec<String> = theta.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(stdin, "{}", line.join(" ")).map_err(|e| Error::SimulatorFailed(e.to_string()))?;
        }
        let stdout = child.stdout.take().expect("piped stdout");
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).map_err(|e| Error::SimulatorFailed(e.to_string()))?;
        let status = child.wait().map_err(|e| Error::SimulatorFailed(e.to_string()))?;
        if !status.success() {
            return Err(Error::SimulatorFailed(format!("{} exited with {status}", self.program)));
        }
        let stats: Vec<f64> = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|e| Error::SimulatorFailed(format!("bad output token {tok:?}: {e}"))))
            .collect::<Result<_>>()?;
        if stats.len() != self.stat_dim {
            return Err(Error::SimulatorFailed(format!("expected {} statistics, got {}", self.stat_dim, stats.len())));
        }
        Ok(stats)
    }
}
