//! Seeded 64-bit hashing shared by seeding and sketches.

use xxhash_rust::xxh3::xxh3_64_with_seed;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// The `index`-th seed of the family derived from `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn hash_bytes(bytes: &[u8], seed: u64) -> u64 {
    xxh3_64_with_seed(bytes, seed)
}

/// Hash of a real vector's bit pattern, with -0.0 folded onto 0.0.
pub fn hash_reals(values: &[f64], seed: u64) -> u64 {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&(v + 0.0).to_bits().to_le_bytes());
    }
    xxh3_64_with_seed(&bytes, seed)
}

/// Maps a hash to the open interval (0, 1).
pub fn unit_open(h: u64) -> f64 {
    ((h >> 12) as f64 + 0.5) / (1u64 << 52) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_hashes_like_zero() {
        assert_eq!(hash_reals(&[-0.0, 1.0], 7), hash_reals(&[0.0, 1.0], 7));
        assert_ne!(hash_reals(&[0.0, 1.0], 7), hash_reals(&[0.0, 1.0], 8));
    }

    #[test]
    fn unit_open_bounds() {
        assert!(unit_open(0) > 0.0);
        assert!(unit_open(u64::MAX) < 1.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..8).map(|i| derive_seed(42, i)).collect();
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }
}
