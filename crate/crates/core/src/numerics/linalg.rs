use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

const SYMMETRY_RTOL: f64 = 1e-12;

/// A symmetric positive (semi-)definite matrix, validated on construction.
///
/// Factorizations accept a ridge parameter `tau`: the amount
/// `tau * trace(A) / p` is added to the diagonal before the Cholesky attempt.
/// Sample covariances of near-duplicate gradients are frequently
/// rank-deficient, so callers pass a small nonzero `tau` by default.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
}

impl SpdMatrix {
    /// Wrap a square symmetric matrix. Fails if the matrix is not symmetric
    /// within a 1e-12 relative tolerance.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSymmetric);
        }
        let scale = m.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(Self { m })
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    fn ridge_amount(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            0.0
        } else {
            tau * self.m.trace() / self.dim() as f64
        }
    }

    /// Lower-triangular Cholesky factor of `A + ridge I`. Returns the factor
    /// together with the ridge actually applied.
    pub fn cholesky(&self, tau: f64) -> Result<(DMatrix<f64>, f64)> {
        let ridge = self.ridge_amount(tau);
        let mut a = self.m.clone();
        for i in 0..self.dim() {
            a[(i, i)] += ridge;
        }
        match nalgebra::Cholesky::new(a) {
            Some(c) => Ok((c.l(), ridge)),
            None => Err(Error::NotPositiveDefinite { minor: self.dim(), ridge }),
        }
    }

    /// Solve `(A + ridge I) x = b` through the Cholesky factorization.
    pub fn solve(&self, b: &DVector<f64>, tau: f64) -> Result<(DVector<f64>, f64)> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: b.len() });
        }
        let (l, ridge) = self.cholesky(tau)?;
        let y = l
            .solve_lower_triangular(b)
            .ok_or(Error::NotPositiveDefinite { minor: self.dim(), ridge })?;
        let x = l
            .transpose()
            .solve_upper_triangular(&y)
            .ok_or(Error::NotPositiveDefinite { minor: self.dim(), ridge })?;
        Ok((x, ridge))
    }

    /// Inverse via `p` Cholesky solves against identity columns, symmetrized.
    pub fn inverse(&self, tau: f64) -> Result<SpdMatrix> {
        let p = self.dim();
        let mut inv = DMatrix::zeros(p, p);
        for j in 0..p {
            let mut e = DVector::zeros(p);
            e[j] = 1.0;
            let (col, _) = self.solve(&e, tau)?;
            inv.set_column(j, &col);
        }
        let sym = (&inv + inv.transpose()) * 0.5;
        SpdMatrix::new(sym)
    }

    /// log det(A + ridge I), from the Cholesky diagonal.
    pub fn log_det(&self, tau: f64) -> Result<f64> {
        let (l, _) = self.cholesky(tau)?;
        Ok(2.0 * (0..self.dim()).map(|i| l[(i, i)].ln()).sum::<f64>())
    }
}
