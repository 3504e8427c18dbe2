//! Statistics-aware learning and inference.
//!
//! The crate monitors the redundancy of data relative to a partially trained
//! model through the learning signal-to-noise ratio (LSNR) and builds on the
//! same minibatch statistics for sampling: stochastic gradient Langevin
//! dynamics, a sequential-test approximate Metropolis-Hastings sampler, and
//! likelihood-free MCMC with a Gaussian-process surrogate that stores every
//! simulation ever run. A deterministic simulated-time harness covers the
//! distributed SGLD protocol.
//!
//! Everything is driven by explicit [`numerics::RngStream`] values, so a run
//! is bitwise reproducible from a single seed.

pub mod adaptive_sgd;
pub mod austerity;
pub mod dsgld;
pub mod error;
pub mod gps_abc;
pub mod lsnr;
pub mod models;
pub mod numerics;
pub mod sgld;
pub mod trace;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
