//! Seeded test functions. The generator is ChaCha8 seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`; every draw is one `next_u64`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::affine::AffineFunction;
use crate::error::{Error, Result};
use crate::geometry::Hierarchy;
use crate::num::NodeValues;

/// One affine function: base level `next_u64 % (max_base + 1)`, then one value
/// `(next_u64 % 2001 - 1000) / 1000` per vertex of that level, in vertex order.
pub fn random_affine(h: &Hierarchy, seed: u64, max_base: usize) -> Result<AffineFunction> {
    if max_base > h.depth() {
        return Err(Error::Depth {
            requested: max_base,
            available: h.depth(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = (rng.next_u64() % (max_base as u64 + 1)) as usize;
    let count = h.level(base)?.vertex_count();
    let values: Vec<i64> = (0..count).map(|_| (rng.next_u64() % 2001) as i64 - 1000).collect();
    AffineFunction::new(h, base, NodeValues::from_integers(&values, 1000))
}

/// `count` functions with seeds `seed, seed + 1, ...`.
pub fn seeded_suite(h: &Hierarchy, seed: u64, count: usize, max_base: usize) -> Result<Vec<AffineFunction>> {
    (0..count as u64)
        .map(|i| random_affine(h, seed.wrapping_add(i), max_base))
        .collect()
}

/// `count` weights `(next_u64 % 1001) / 1000` in `[0, 1]`.
#[must_use]
pub fn random_weights(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (rng.next_u64() % 1001) as f64 / 1000.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratios::RatioSequence;

    #[test]
    fn reproducible() {
        let h = Hierarchy::build(&RatioSequence::constant(3).unwrap(), 3).unwrap();
        let a = seeded_suite(&h, 7, 5, 3).unwrap();
        let b = seeded_suite(&h, 7, 5, 3).unwrap();
        assert_eq!(a, b);
        for u in &a {
            assert!(u.base_level() <= 3);
            assert!(u.sup_norm().to_f64() <= 1.0);
        }
        assert_eq!(random_weights(1, 4), random_weights(1, 4));
    }
}
