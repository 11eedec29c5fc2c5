//! Deterministic derivation of per-item seeds from a run seed.

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `std`'s hashers.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer over `seed ^ salt`; nearby inputs give unrelated outputs.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = (seed ^ salt.rotate_left(32)).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the item named `key` within a run seeded with `seed`.
pub fn for_key(seed: u64, key: &str) -> u64 {
    mix(seed, fnv1a(key.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn keys_separate() {
        assert_ne!(for_key(0, "a.1"), for_key(0, "a.2"));
        assert_ne!(for_key(0, "a.1"), for_key(1, "a.1"));
        assert_eq!(for_key(7, "x"), for_key(7, "x"));
    }
}
