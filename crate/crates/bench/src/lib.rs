//! Seeded inputs shared by the benchmarks.

use aiou_core::map::Map;
use aiou_core::stats::ConfusionCounts;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense random map with entries in `[0, 1)` and at least one positive value.
pub fn random_map(rng: &mut impl Rng, h: usize, w: usize) -> Map {
    let mut data: Vec<f64> = (0..h * w).map(|_| rng.gen()).collect();
    data[0] += 1.0;
    Map::new(h, w, data).expect("valid map")
}

/// Random subgroup sizes with every cell in `1..=max`.
pub fn random_counts(rng: &mut impl Rng, max: u64) -> ConfusionCounts {
    ConfusionCounts::from_array(std::array::from_fn(|_| rng.gen_range(1..=max)))
}
