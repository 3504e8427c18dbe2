use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample;

use crate::numerics::RngStream;
use crate::{Error, Result};

/// An immutable feature/label table. All rows share the feature dimension.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::InvalidConfig("dataset needs at least one row and matching labels".into()));
        }
        let dim = features[0].len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::MalformedRow { line: i + 1, reason: format!("expected {dim} features, got {}", row.len()) });
            }
        }
        Ok(Self { features, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> (&[f64], f64) {
        (&self.features[i], self.labels[i])
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Standardize each feature column to zero mean and unit variance.
    /// Constant columns are left centered only.
    pub fn standardized(mut self) -> Self {
        let n = self.len() as f64;
        for j in 0..self.dim {
            let mean: f64 = self.features.iter().map(|r| r[j]).sum::<f64>() / n;
            let var: f64 = self.features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for row in &mut self.features {
                row[j] -= mean;
                if sd > 0.0 {
                    row[j] /= sd;
                }
            }
        }
        self
    }

    /// Keep only the listed feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        for &c in columns {
            if c >= self.dim {
                return Err(Error::MissingColumn(c));
            }
        }
        let features = self
            .features
            .iter()
            .map(|r| columns.iter().map(|&c| r[c]).collect())
            .collect();
        Dataset::new(features, self.labels.clone())
    }

    /// Deterministic split: seeded shuffle, then the first
    /// `ceil(frac * N)` rows form the kept part.
    pub fn split(&self, frac: f64, rng: &mut RngStream) -> (Dataset, Dataset) {
        let n = self.len();
        let k = ((frac * n as f64).ceil() as usize).min(n);
        let perm = sample(rng, n, n).into_vec();
        let pick = |idx: &[usize]| Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        };
        (pick(&perm[..k]), pick(&perm[k..]))
    }

    /// Restrict to a contiguous index range (used for worker shards).
    pub fn slice_range(&self, start: usize, end: usize) -> Result<Dataset> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidConfig(format!("bad slice range {start}..{end}")));
        }
        Dataset::new(self.features[start..end].to_vec(), self.labels[start..end].to_vec())
    }

    /// Resample N rows with replacement (bootstrap replicate).
    pub fn bootstrap_resample(&self, rng: &mut RngStream) -> Vec<usize> {
        let n = self.len();
        (0..n).map(|_| rand::Rng::random_range(rng, 0..n)).collect()
    }

    /// Serialize as CSV (features then label), 17 significant digits.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (row, &y) in self.features.iter().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v:.17e},");
            }
            let _ = writeln!(out, "{y:.17e}");
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Column layout for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub has_header: bool,
    pub label_column: usize,
    /// Feature columns in file order; empty means "all non-label columns".
    pub feature_columns: Vec<usize>,
    pub standardize: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { has_header: false, label_column: 0, feature_columns: Vec::new(), standardize: false }
    }
}

/// Read a comma-separated numeric file into a [`Dataset`].
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_no1 = lineno + 1;
        if schema.has_header && lineno == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let w = *width.get_or_insert(fields.len());
        if fields.len() != w {
            return Err(Error::MalformedRow { line: line_no1, reason: format!("expected {w} fields, got {}", fields.len()) });
        }
        if schema.label_column >= w {
            return Err(Error::MissingColumn(schema.label_column));
        }
        for &c in &schema.feature_columns {
            if c >= w {
                return Err(Error::MissingColumn(c));
            }
        }
        let parse = |c: usize| -> Result<f64> {
            fields[c].trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                line: line_no1,
                reason: format!("non-numeric field {:?} in column {c}", fields[c].trim()),
            })
        };
        let cols: Vec<usize> = if schema.feature_columns.is_empty() {
            (0..w).filter(|&c| c != schema.label_column).collect()
        } else {
            schema.feature_columns.clone()
        };
        let row: Vec<f64> = cols.into_iter().map(parse).collect::<Result<_>>()?;
        features.push(row);
        labels.push(parse(schema.label_column)?);
    }
    let data = Dataset::new(features, labels)?;
    Ok(if schema.standardize { data.standardized() } else { data })
}

/// A without-replacement index set into a dataset.
#[derive(Debug, Clone)]
pub struct Minibatch {
    indices: Vec<usize>,
}

impl Minibatch {
    pub fn from_indices(indices: Vec<usize>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Add `extra` new indices drawn uniformly from the complement, keeping
    /// the existing indices in place (superset growth).
    pub fn grow(&mut self, dataset_len: usize, extra: usize, rng: &mut RngStream) -> Result<()> {
        if self.indices.len() + extra > dataset_len {
            return Err(Error::SizeExceedsDataset { n: self.indices.len() + extra, len: dataset_len });
        }
        let mut in_batch = vec![false; dataset_len];
        for &i in &self.indices {
            in_batch[i] = true;
        }
        let complement: Vec<usize> = (0..dataset_len).filter(|&i| !in_batch[i]).collect();
        let picked = sample(rng, complement.len(), extra);
        for k in picked.iter() {
            self.indices.push(complement[k]);
        }
        Ok(())
    }
}

/// Draw `n` unique indices uniformly without replacement.
pub fn sample_minibatch(dataset_len: usize, n: usize, rng: &mut RngStream) -> Result<Minibatch> {
    if n == 0 || n > dataset_len {
        return Err(Error::SizeExceedsDataset { n, len: dataset_len });
    }
    Ok(Minibatch { indices: sample(rng, dataset_len, n).into_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ingest_small_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "1.0,2.0,1\n3.0,4.0,0\n5.0,6.0,1\n").unwrap();
        let schema = CsvSchema { label_column: 2, ..Default::default() };
        let d = ingest_csv(&p, &schema).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.row(1), (&[3.0, 4.0][..], 0.0));
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "1.0,2.0,1\n3.0,oops,0\n").unwrap();
        let err = ingest_csv(&p, &CsvSchema { label_column: 2, ..Default::default() }).unwrap_err();
        match err {
            Error::MalformedRow { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = Dataset::new(vec![vec![1.25, -3.5], vec![0.1, 2.75]], vec![1.0, 0.0]).unwrap();
        d.to_csv(&p).unwrap();
        let schema = CsvSchema { label_column: 2, ..Default::default() };
        let d2 = ingest_csv(&p, &schema).unwrap();
        for i in 0..2 {
            let (x, y) = d.row(i);
            let (x2, y2) = d2.row(i);
            for (a, b) in x.iter().zip(x2) {
                assert!((a - b).abs() < 1e-12);
            }
            assert!((y - y2).abs() < 1e-12);
        }
    }

    #[test]
    fn minibatch_full_and_single() {
        let mut rng = RngStream::new(3, 0);
        let b = sample_minibatch(10, 10, &mut rng).unwrap();
        let mut sorted = b.indices().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        let b1 = sample_minibatch(10, 1, &mut rng).unwrap();
        assert_eq!(b1.len(), 1);
        assert!(sample_minibatch(10, 11, &mut rng).is_err());
    }

    #[test]
    fn minibatch_inclusion_rates() {
        let (n, big_n, draws) = (3usize, 10usize, 100_000usize);
        let mut rng = RngStream::new(5, 0);
        let mut counts = vec![0usize; big_n];
        for _ in 0..draws {
            for &i in sample_minibatch(big_n, n, &mut rng).unwrap().indices() {
                counts[i] += 1;
            }
        }
        let p = n as f64 / big_n as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in &counts {
            let rate = c as f64 / draws as f64;
            assert!((rate - p).abs() < 4.0 * se, "rate {rate}");
        }
    }

    #[test]
    fn grow_is_superset_without_duplicates() {
        let mut rng = RngStream::new(5, 1);
        let mut b = sample_minibatch(50, 10, &mut rng).unwrap();
        let orig = b.indices().to_vec();
        b.grow(50, 15, &mut rng).unwrap();
        assert_eq!(&b.indices()[..10], &orig[..]);
        let mut all = b.indices().to_vec();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 25);
    }

    #[test]
    fn split_is_deterministic() {
        let d = Dataset::new((0..20).map(|i| vec![i as f64]).collect(), vec![0.0; 20]).unwrap();
        let (a1, b1) = d.split(0.8, &mut RngStream::new(7, 0));
        let (a2, _) = d.split(0.8, &mut RngStream::new(7, 0));
        assert_eq!(a1.len(), 16);
        assert_eq!(b1.len(), 4);
        for i in 0..16 {
            assert_eq!(a1.row(i).0, a2.row(i).0);
        }
    }
}
