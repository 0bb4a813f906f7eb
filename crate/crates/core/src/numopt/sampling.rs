use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::kernel::{GridSpec, Strategy};

/// Uniform samples on the simplex `{v >= 0, sum v = N X / T}`.
///
/// Normalized unit exponentials give the flat Dirichlet distribution. Samples
/// are drawn sequentially from one seeded stream, so the list depends only on
/// `seed` and `count`.
pub fn sample_start_points(count: usize, grid: &GridSpec, seed: u64) -> Vec<Strategy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.intervals;
    let target = grid.target_rate_sum();
    (0..count)
        .map(|_| {
            let mut rates: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = rates.iter().sum();
            rates.iter_mut().for_each(|v| *v *= target / total);
            Strategy { rates, grid: *grid }
        })
        .collect()
}
