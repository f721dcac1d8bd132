//! Seed derivation for independent, order-free trials.

/// SplitMix64 finaliser applied to `base + (index + 1) * golden`.
///
/// Distinct `(base, index)` pairs give well-separated seeds, so trials can
/// run on any thread in any order.
pub fn mix(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
