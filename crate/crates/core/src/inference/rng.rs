use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub type ReplicateRng = SplitMix64;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replicate `index`: the `(index + 1)`-th output of a SplitMix64
/// stream started at `seed`.
///
/// Equivalently `mix(seed + (index + 1) * 0x9E3779B97F4A7C15)` with the
/// standard SplitMix64 finaliser and wrapping arithmetic.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    SplitMix64::seed_from_u64(seed.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA))).next_u64()
}

/// Generator for replicate `index`: SplitMix64 with state
/// `replicate_seed(seed, index)`.
pub fn replicate_rng(seed: u64, index: u64) -> ReplicateRng {
    SplitMix64::seed_from_u64(replicate_seed(seed, index))
}

/// Uniform on `[0, 1)` from the top 53 bits.
pub fn uniform_f64(rng: &mut ReplicateRng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `[0, total)` by multiply-shift.
pub(crate) fn below(rng: &mut ReplicateRng, total: u64) -> u64 {
    ((rng.next_u64() as u128 * total as u128) >> 64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    #[test]
    fn seed_is_stream_output() {
        let mut stream = SplitMix64::seed_from_u64(42);
        for i in 0..100 {
            assert_eq!(replicate_seed(42, i), stream.next_u64());
        }
        assert_eq!(replicate_seed(u64::MAX, 3), mix(u64::MAX.wrapping_add(4u64.wrapping_mul(GOLDEN_GAMMA))));
    }

    #[test]
    fn uniform_range() {
        let mut rng = replicate_rng(7, 0);
        for _ in 0..10_000 {
            let u = uniform_f64(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
        let mut rng = replicate_rng(7, 1);
        for _ in 0..10_000 {
            assert!(below(&mut rng, 3) < 3);
        }
    }
}
