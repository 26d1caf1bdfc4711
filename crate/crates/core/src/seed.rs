//! Seed mixing for reproducible, independent random streams.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `x + golden`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `words` into `seed` one at a time.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(seed), |acc, &w| {
        splitmix64(acc ^ splitmix64(w.wrapping_add(GOLDEN)))
    })
}
