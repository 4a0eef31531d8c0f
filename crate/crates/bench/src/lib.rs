//! Input generators shared by the benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `rows × cols` matrix of uniform values in [0, 1).
pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>())
}

/// Scores and labels with roughly `positive_rate` positives, positives
/// shifted upward so the ROC curve is non-trivial.
pub fn scored_labels(n: usize, positive_rate: f64, seed: u64) -> (Vec<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let label = u8::from(rng.random_bool(positive_rate));
            let score = rng.random::<f64>() + 0.5 * f64::from(label);
            (score, label)
        })
        .unzip()
}
