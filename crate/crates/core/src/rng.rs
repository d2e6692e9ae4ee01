//! Seeded randomness shared by every Monte-Carlo routine.
//!
//! All draws go through ChaCha8 so results are bit-reproducible across
//! platforms for a given seed.

use nalgebra::DVector;
use rand::seq::index;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` under `master`. Distinct indices give
/// statistically independent streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Vector of i.i.d. N(0, std^2) entries.
pub fn normal_vector(rng: &mut Rng, dim: usize, std: f64) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| std * normal(rng))
}

pub fn uniform_index(rng: &mut Rng, n: usize) -> usize {
    rng.random_range(0..n)
}

/// `k` indices from `0..n`; distinct when `k <= n`, with replacement otherwise.
pub fn batch_indices(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    if k <= n {
        index::sample(rng, n, k).into_vec()
    } else {
        (0..k).map(|_| uniform_index(rng, n)).collect()
    }
}
