//! Keyed pseudo-randomness shared by builders, oracles and trial seeding.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a word sequence.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(GOLDEN, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Uniform draw in `[0, 1)` keyed by `words`.
pub fn unit_interval(words: &[u64]) -> f64 {
    (mix(words) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed of trial `index` under a master seed.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix(&[master, index])
}
