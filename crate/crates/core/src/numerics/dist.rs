use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::{Error, Result};

/// Poisson tail mass below which the mixture series is truncated.
const SERIES_TOL: f64 = 1e-12;

/// Non-central chi-squared law with `dof` degrees of freedom and
/// non-centrality `lambda`; governs `p * LSNR_p` under dataset resampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChi2 {
    dof: usize,
    lambda: f64,
}

impl NoncentralChi2 {
    pub fn new(dof: usize, lambda: f64) -> Result<Self> {
        if dof < 1 {
            return Err(Error::InvalidConfig("degrees of freedom must be >= 1".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("non-centrality must be >= 0, got {lambda}")));
        }
        Ok(Self { dof, lambda })
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mean(&self) -> f64 {
        self.dof as f64 + self.lambda
    }

    pub fn variance(&self) -> f64 {
        2.0 * (self.dof as f64 + 2.0 * self.lambda)
    }

    /// CDF as a Poisson(lambda/2)-weighted series of central chi-squared
    /// CDFs, truncated when the remaining Poisson mass drops below 1e-12.
    /// The series is accumulated outward from the Poisson mode so large
    /// non-centralities never underflow.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if self.lambda == 0.0 {
            return central_chi2_cdf(x, self.dof as f64);
        }
        self.poisson_series(|j| central_chi2_cdf(x, (self.dof + 2 * j) as f64))
    }

    /// Density of the same mixture. At x = 0 with dof = 1 the density
    /// diverges; the boundary convention returns +inf.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return match self.dof {
                1 => f64::INFINITY,
                2 => 0.5 * (-0.5 * self.lambda).exp(),
                _ => 0.0,
            };
        }
        if self.lambda == 0.0 {
            return central_chi2_pdf(x, self.dof as f64);
        }
        self.poisson_series(|j| central_chi2_pdf(x, (self.dof + 2 * j) as f64))
    }

    /// CDF of `LSNR_p = X / p`, i.e. of the scaled variable.
    pub fn lsnr_cdf(&self, x: f64) -> f64 {
        self.cdf(self.dof as f64 * x)
    }

    /// Density of `LSNR_p = X / p`: change of variables `p * pdf(p x)`.
    pub fn lsnr_pdf(&self, x: f64) -> f64 {
        let p = self.dof as f64;
        p * self.pdf(p * x)
    }

    /// Mean of `LSNR_p`: `lambda / p + 1`.
    pub fn lsnr_mean(&self) -> f64 {
        self.lambda / self.dof as f64 + 1.0
    }

    /// Variance of `LSNR_p`: `(2 / p^2)(p + 2 lambda)`.
    pub fn lsnr_variance(&self) -> f64 {
        let p = self.dof as f64;
        2.0 / (p * p) * (p + 2.0 * self.lambda)
    }

    fn poisson_series(&self, term: impl Fn(usize) -> f64) -> f64 {
        let half = 0.5 * self.lambda;
        let mode = half.floor() as usize;
        let log_w_mode = -half + mode as f64 * half.ln() - ln_gamma(mode as f64 + 1.0);
        let w_mode = log_w_mode.exp();

        let mut total = w_mode * term(mode);
        let mut covered = w_mode;

        // upward from the mode
        let mut w = w_mode;
        let mut j = mode;
        while covered < 1.0 - SERIES_TOL {
            j += 1;
            w *= half / j as f64;
            total += w * term(j);
            covered += w;
            // downward leg still pending; bail out of the upward leg once
            // its own contribution is negligible
            if w < SERIES_TOL * w_mode.max(f64::MIN_POSITIVE) && j > mode + 4 {
                break;
            }
        }
        // downward from the mode
        let mut w = w_mode;
        let mut j = mode;
        while j > 0 && covered < 1.0 - SERIES_TOL {
            w *= j as f64 / half;
            j -= 1;
            total += w * term(j);
            covered += w;
        }
        total
    }
}

/// Central chi-squared CDF: regularized lower incomplete gamma.
pub fn central_chi2_cdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(dof / 2.0, x / 2.0)
    }
}

/// Central chi-squared density.
pub fn central_chi2_pdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k2 = dof / 2.0;
    ((k2 - 1.0) * x.ln() - x / 2.0 - k2 * 2.0f64.ln() - ln_gamma(k2)).exp()
}

/// Upper tail P(T > t) of Student's t with `dof` degrees of freedom.
///
/// Computed from the regularized incomplete beta on |t| so that
/// `tail(t) + tail(-t) = 1` holds exactly.
pub fn student_t_tail(t: f64, dof: usize) -> f64 {
    let v = dof as f64;
    if t == 0.0 {
        return 0.5;
    }
    let x = v / (v + t * t);
    let half_tail = 0.5 * beta_reg(v / 2.0, 0.5, x);
    if t > 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use approx::assert_relative_eq;

    /// Independent oracle: direct Poisson-mixture summation from j = 0 with a
    /// conservative truncation bound, no mode-centered restart.
    fn ncx2_cdf_oracle(x: f64, p: usize, lambda: f64) -> f64 {
        let half = 0.5 * lambda;
        let mut sum = 0.0;
        let mut log_w = -half;
        for j in 0..20_000 {
            let w = log_w.exp();
            sum += w * central_chi2_cdf(x, (p + 2 * j) as f64);
            log_w += half.ln() - ((j + 1) as f64).ln();
            if j as f64 > half && w < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn zero_is_zero() {
        let d = NoncentralChi2::new(3, 5.0).unwrap();
        assert_eq!(d.cdf(0.0), 0.0);
        assert_eq!(d.cdf(-1.0), 0.0);
    }

    #[test]
    fn central_p2_closed_form() {
        // chi^2_2 CDF = 1 - exp(-x/2)
        let d = NoncentralChi2::new(2, 0.0).unwrap();
        assert_relative_eq!(d.cdf(2.0), 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(d.pdf(1.3), 0.5 * (-0.65f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn huge_noncentrality_tail() {
        let d = NoncentralChi2::new(10, 1000.0).unwrap();
        let v = d.cdf(1.0);
        assert!(v < 1e-6, "cdf {v}");
        assert!(v >= 0.0);
        assert_relative_eq!(v, ncx2_cdf_oracle(1.0, 10, 1000.0), epsilon = 1e-9, max_relative = 1e-6);
    }

    #[test]
    fn matches_series_oracle() {
        for &(x, p, l) in &[(1.0, 2, 3.0), (5.0, 5, 0.5), (12.0, 10, 8.0), (30.0, 3, 25.0)] {
            let d = NoncentralChi2::new(p, l).unwrap();
            assert_relative_eq!(d.cdf(x), ncx2_cdf_oracle(x, p, l), epsilon = 1e-10);
        }
    }

    #[test]
    fn central_matches_gamma_form() {
        for &p in &[1usize, 2, 5, 10] {
            for &x in &[0.5, 1.0, 2.0, 5.0, 10.0] {
                let d = NoncentralChi2::new(p, 0.0).unwrap();
                assert_relative_eq!(d.cdf(x), gamma_lr(p as f64 / 2.0, x / 2.0), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn cdf_monotone_in_x_and_lambda() {
        let d = NoncentralChi2::new(4, 3.0).unwrap();
        let mut prev = 0.0;
        for i in 1..100 {
            let v = d.cdf(i as f64 * 0.3);
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = 1.0;
        for i in 0..50 {
            let v = NoncentralChi2::new(4, i as f64 * 0.5).unwrap().cdf(3.0);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn pdf_integrates_to_one() {
        let d = NoncentralChi2::new(3, 4.0).unwrap();
        // trapezoid on [0, 60]
        let n = 60_000;
        let h = 60.0 / n as f64;
        let mut mass = 0.0;
        for i in 0..n {
            let a = i as f64 * h;
            mass += 0.5 * (d.pdf(a) + d.pdf(a + h)) * h;
        }
        assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn pdf_boundary_conventions() {
        assert!(NoncentralChi2::new(1, 0.0).unwrap().pdf(0.0).is_infinite());
        assert_eq!(NoncentralChi2::new(3, 0.0).unwrap().pdf(0.0), 0.0);
    }

    #[test]
    fn scaled_density_change_of_variables() {
        let d = NoncentralChi2::new(5, 2.0).unwrap();
        for &x in &[0.2, 1.0, 3.5] {
            assert_relative_eq!(d.lsnr_pdf(x), 5.0 * d.pdf(5.0 * x), epsilon = 1e-14);
        }
    }

    #[test]
    fn moments_identities() {
        let d = NoncentralChi2::new(7, 11.5).unwrap();
        assert_eq!(d.mean(), 7.0 + 11.5);
        assert_eq!(d.variance(), 2.0 * (7.0 + 2.0 * 11.5));
        assert_relative_eq!(d.lsnr_mean(), 11.5 / 7.0 + 1.0);
        assert_relative_eq!(d.lsnr_variance(), 2.0 / 49.0 * (7.0 + 23.0));
    }

    #[test]
    fn monte_carlo_dkw_band() {
        // z = sum_j (nu_j)^2, nu ~ N(m, I), lambda = |m|^2
        let m = [1.2, -0.7, 0.4];
        let lambda: f64 = m.iter().map(|v| v * v).sum();
        let d = NoncentralChi2::new(3, lambda).unwrap();
        let n = 100_000usize;
        let mut rng = RngStream::new(2024, 0);
        let mut draws: Vec<f64> = (0..n)
            .map(|_| m.iter().map(|&mu| (mu + rng.normal()).powi(2)).sum())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // DKW 99% band: sqrt(ln(2/alpha) / (2n))
        let band = ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt();
        for (i, &z) in draws.iter().enumerate().step_by(97) {
            let emp = (i + 1) as f64 / n as f64;
            assert!((emp - d.cdf(z)).abs() <= band, "z={z} emp={emp} cdf={}", d.cdf(z));
        }
    }

    #[test]
    fn t_tail_symmetry_and_cauchy() {
        for &dof in &[1usize, 3, 10, 30] {
            assert_eq!(student_t_tail(0.0, dof), 0.5);
            for &t in &[0.3, 1.0, 2.5] {
                let s = student_t_tail(t, dof) + student_t_tail(-t, dof);
                assert_relative_eq!(s, 1.0, epsilon = 1e-14);
            }
        }
        // dof = 1 is Cauchy: P(T > 1) = 1/2 - atan(1)/pi = 0.25
        assert_relative_eq!(student_t_tail(1.0, 1), 0.25, epsilon = 1e-10);
    }

    #[test]
    fn t_tail_matches_quadrature() {
        // Simpson quadrature of the t density on [t, t + 60]
        let dof = 30usize;
        let t = 2.5;
        let v = dof as f64;
        let c = (ln_gamma((v + 1.0) / 2.0) - ln_gamma(v / 2.0)).exp() / (v * std::f64::consts::PI).sqrt();
        let pdf = |x: f64| c * (1.0 + x * x / v).powf(-(v + 1.0) / 2.0);
        let n = 40_000;
        let h = 60.0 / n as f64;
        let mut s = pdf(t) + pdf(t + 60.0);
        for i in 1..n {
            s += pdf(t + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let tail = s * h / 3.0;
        assert_relative_eq!(student_t_tail(t, dof), tail, epsilon = 1e-6);
    }
}
