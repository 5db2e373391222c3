//! Shared synthetic instances for the benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use alpha_core::blockspace::{BlockMetric, BlockPartition, BlockVector};
use alpha_core::objective::{square_losses, SmoothObjective, SparseMatrix};

/// Random sparse least-squares instance over scalar blocks. Every column is
/// guaranteed nonempty.
pub fn synthetic_least_squares(m: usize, n: usize, density: f64, seed: u64) -> SmoothObjective {
    let partition = BlockPartition::scalar(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    let mut filled = vec![false; n];
    for r in 0..m {
        for (c, f) in filled.iter_mut().enumerate() {
            if rng.random::<f64>() < density {
                triplets.push((r, c, rng.random::<f64>() * 2.0 - 1.0));
                *f = true;
            }
        }
    }
    for (c, f) in filled.iter().enumerate() {
        if !f {
            triplets.push((c % m, c, 1.0));
        }
    }
    let matrix = SparseMatrix::from_triplets(&partition, m, &triplets).unwrap();
    let b: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    SmoothObjective::new(matrix, square_losses(&b), BlockMetric::identity(&partition)).unwrap()
}

pub fn zero_start(obj: &SmoothObjective) -> BlockVector {
    BlockVector::zeros(obj.partition())
}
