//! Deterministic seed derivation. Every match, player and expert gets a seed
//! computed from its parent seed and its position, so results never depend
//! on the order in which work is scheduled.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    // SplitMix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `base`, one SplitMix64 round per part.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix(base.wrapping_add(GOLDEN)), |acc, &p| {
            mix(acc ^ mix(p.wrapping_add(GOLDEN)))
        })
}
