//! Seeded inputs shared by the benchmarks.

use lineval::clustering::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// `k` spherical blobs of `n / k` points in `m` dimensions, centres 8 apart
/// along the diagonal.
pub fn blobs(n: usize, m: usize, k: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f64, 1.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = (i % k) as f64 * 8.0;
            (0..m).map(|_| c + noise.sample(&mut rng)).collect()
        })
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

/// Lognormal salaries shifted above `lower`.
pub fn salaries(n: usize, lower: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(15.0f64, 0.5).unwrap();
    (0..n).map(|_| lower + noise.sample(&mut rng).exp() + rng.random::<f64>()).collect()
}
