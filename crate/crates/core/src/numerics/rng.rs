use nalgebra::DMatrix;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A seeded, stream-addressable random number generator.
///
/// Identical `(seed, stream)` pairs yield identical draw sequences; distinct
/// stream ids yield statistically independent streams of the same seed. Every
/// subsystem takes its own stream so that reordering modules never perturbs
/// another module's draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Derive an independent child stream. The mapping is injective for
    /// distinct `(stream, id)` pairs in practice (splitmix64 mixing).
    pub fn substream(&self, id: u64) -> Self {
        Self::new(self.seed, splitmix64(self.stream ^ splitmix64(id)))
    }

    /// One standard-normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw on (0, 1), never exactly zero (safe to take logs of).
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u: f64 = rand::Rng::random(&mut self.inner);
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw a Gaussian vector with the given mean and per-coordinate standard
/// deviations. A zero std yields the mean coordinate exactly.
pub fn gaussian_vector(rng: &mut RngStream, mean: &[f64], std: &[f64]) -> Vec<f64> {
    mean.iter()
        .zip(std)
        .map(|(&m, &s)| if s == 0.0 { m } else { m + s * rng.normal() })
        .collect()
}

/// Draw a correlated Gaussian vector `mean + L z` with `L` a Cholesky factor
/// of the desired covariance.
pub fn gaussian_correlated(rng: &mut RngStream, mean: &[f64], chol: &DMatrix<f64>) -> Vec<f64> {
    let p = mean.len();
    let z: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
    let mut out = mean.to_vec();
    for i in 0..p {
        for (j, zj) in z.iter().enumerate().take(i + 1) {
            out[i] += chol[(i, j)] * zj;
        }
    }
    out
}
