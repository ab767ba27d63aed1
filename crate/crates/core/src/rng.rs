//! Seeded random streams.
//!
//! Every sampler draws from [`SampleRng`], ChaCha with 8 rounds. Its output
//! is defined by the seed alone, so streams replay identically on every
//! platform.

use rand::SeedableRng;

pub type SampleRng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> SampleRng {
    SampleRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent sub-seed for worker, cell or repetition `index`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index))
}

/// Base seed from a name (FNV-1a, then mixed).
pub fn name_seed(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_seed_same_stream() {
        let mut a = seeded(42);
        let mut b = seeded(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn chacha_stream_is_pinned() {
        // Guards against silent generator changes across dependency bumps.
        let mut r = seeded(0);
        assert_eq!(r.next_u64(), 0xb585_f767_a79a_3b6c);
        assert_eq!(r.next_u64(), 0x7746_a55f_bad8_c037);
    }

    #[test]
    fn splitmix_reference_value() {
        // First SplitMix64 output for state 0.
        assert_eq!(mix64(0), 0xe220_a839_7b1d_cdaf);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: alloc::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(name_seed("a"), name_seed("b"));
        assert_eq!(name_seed("additive"), name_seed("additive"));
    }
}
