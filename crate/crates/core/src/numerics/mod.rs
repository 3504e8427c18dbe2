//! Deterministic random-number streams, SPD linear algebra, and the
//! probability distributions the rest of the crate consumes.

mod dist;
mod linalg;
mod rng;

pub use dist::{central_chi2_cdf, central_chi2_pdf, student_t_tail, NoncentralChi2};
pub use linalg::SpdMatrix;
pub use rng::{gaussian_correlated, gaussian_vector, RngStream};
