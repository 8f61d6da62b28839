//! Hierarchical seed derivation.
//!
//! Every random stream in the pipeline is derived from a master seed by a
//! chain of labels (`master -> stage -> trial -> step`), so adding a trial or
//! a step never shifts the stream of any other one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// FNV-1a, stable across toolchains unlike `DefaultHasher`.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Child seed for a named stage.
pub fn derive(parent: u64, label: &str) -> u64 {
    splitmix64(splitmix64(parent) ^ fnv1a(label.as_bytes()))
}

/// Child seed for an indexed item (trial, iteration, ...).
pub fn derive_index(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent ^ 0xA076_1D64_78BD_642F) ^ splitmix64(index))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
