//! Named, reproducible random sub-streams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed for the sub-stream addressed by `path` under `master`.
pub fn derive_seed(master: u64, path: &[&str]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, part| splitmix64(acc ^ fnv1a(part.as_bytes())))
}

/// Seed for the `index`-th replicate of a stream.
pub fn replicate_seed(stream: u64, index: u64) -> u64 {
    splitmix64(stream ^ splitmix64(index.wrapping_add(1)))
}

pub fn substream(master: u64, path: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}
