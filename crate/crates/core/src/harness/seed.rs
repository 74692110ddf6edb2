//! Stable child-seed derivation.
//!
//! A child seed folds the master seed, the run index and a tag into one
//! 64-bit state through the SplitMix64 finaliser:
//!
//! ```text
//! h = mix(master ^ 0x9E3779B97F4A7C15)
//! h = mix(h ^ run)
//! h = mix(h ^ byte)   for every byte of the tag
//! ```
//!
//! The tag `"data"` seeds the dataset and initial point, so every optimiser
//! sees the same problem for a given run; optimiser tags seed the oracle
//! noise stream.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, run: u64, tag: &str) -> u64 {
    let mut h = splitmix64(master ^ GOLDEN);
    h = splitmix64(h ^ run);
    for b in tag.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h
}

/// Tag for the dataset and initial-point stream.
pub const DATA_TAG: &str = "data";
