//! Seed derivation for reproducible parallel replicates.
//!
//! Every replicate owns a ChaCha8 stream keyed by `splitmix64(root ^ tag)`
//! with stream number equal to the replicate index, so results depend only
//! on `(root, tag, index)` and never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit tag for a named experiment stream (FNV-1a).
pub fn tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn replicate_rng(root: u64, stream: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(root ^ splitmix64(stream)));
    rng.set_stream(index);
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn replicate_streams_are_distinct_and_reproducible() {
        let a: u64 = replicate_rng(7, 1, 0).random();
        let b: u64 = replicate_rng(7, 1, 1).random();
        let c: u64 = replicate_rng(7, 2, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, replicate_rng(7, 1, 0).random::<u64>());
    }
}
