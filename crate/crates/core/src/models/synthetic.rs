//! Deterministic synthetic datasets used by the experiment runners and tests.

use std::path::Path;

use super::{CsvSchema, Dataset};
use crate::numerics::RngStream;
use crate::Result;

/// Spambase layout constants: 57 feature columns, label last, 4601 rows.
pub const SPAMBASE_ROWS: usize = 4601;
pub const SPAMBASE_FEATURES: usize = 57;

/// Coefficients of the generating logistic model over the first ten
/// feature columns (bias 0). Mixed magnitudes so the features carry
/// unequal amounts of signal.
const TRUE_COEFFS: [f64; 10] = [1.6, -1.1, 0.8, 0.5, -0.4, 1.2, -0.9, 0.3, -0.2, 0.7];

/// Generate a Spambase-shaped table (4601 rows, 57 features + binary label
/// in the last column). The label depends on the first ten columns through
/// a fixed logistic model; the remaining columns are noise. Fully
/// deterministic given the stream.
pub fn spambase_like(rng: &mut RngStream) -> Dataset {
    let mut features = Vec::with_capacity(SPAMBASE_ROWS);
    let mut labels = Vec::with_capacity(SPAMBASE_ROWS);
    for _ in 0..SPAMBASE_ROWS {
        // heavy-tailed-ish positive skew, loosely like word frequencies
        let row: Vec<f64> = (0..SPAMBASE_FEATURES).map(|_| (0.6 * rng.normal()).exp() - 1.0).collect();
        let z: f64 = TRUE_COEFFS.iter().zip(&row).map(|(c, x)| c * x).sum();
        let p = 1.0 / (1.0 + (-z).exp());
        labels.push(if rng.uniform_open() < p { 1.0 } else { 0.0 });
        features.push(row);
    }
    Dataset::new(features, labels).expect("generated rows are rectangular")
}

/// Write the Spambase-shaped table as a CSV file (features then label).
pub fn write_spambase_like(path: &Path, rng: &mut RngStream) -> Result<()> {
    spambase_like(rng).to_csv(path)
}

/// The spam training fixture: first ten feature columns, standardized, and
/// a deterministic 80% split (3681 of 4601 rows) by seeded shuffle.
pub fn spam_fixture(seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed, 0xF1);
    let full = spambase_like(&mut rng);
    let ten = full.select_features(&(0..10).collect::<Vec<_>>()).expect("57 columns");
    let (train, _) = ten.standardized().split(0.8, &mut rng.substream(1));
    train
}

/// Apply the fixture reduction (first ten columns, standardize, 80% split)
/// to an externally ingested Spambase-style table.
pub fn reduce_spambase(full: &Dataset, seed: u64) -> Result<Dataset> {
    let ten = full.select_features(&(0..10).collect::<Vec<_>>())?;
    let (train, _) = ten.standardized().split(0.8, &mut RngStream::new(seed, 0xF1).substream(1));
    Ok(train)
}

/// Iid draws from `N(mean, sigma2)` as a one-feature dataset.
pub fn gaussian_dataset(n: usize, mean: f64, sigma2: f64, rng: &mut RngStream) -> Dataset {
    let sd = sigma2.sqrt();
    let features: Vec<Vec<f64>> = (0..n).map(|_| vec![mean + sd * rng.normal()]).collect();
    Dataset::new(features, vec![0.0; n]).expect("nonempty")
}

/// Schema for a Spambase-style file: 58 columns, label last.
pub fn spambase_schema() -> CsvSchema {
    CsvSchema { has_header: false, label_column: SPAMBASE_FEATURES, feature_columns: Vec::new(), standardize: false }
}
