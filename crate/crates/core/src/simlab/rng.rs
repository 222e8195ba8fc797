//! Reproducible random streams for the simulation lab.
//!
//! Every draw comes from a ChaCha20 stream addressed by
//! `(seed, replicate, domain, purpose)`: the seed and replicate form the
//! key, the domain and purpose select the 64-bit stream. Streams never
//! overlap, so results do not depend on how replications are scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Design = 1,
    Noise = 2,
    Coefficients = 3,
    Contrast = 4,
    TestSet = 5,
    Split = 6,
}

const DOMAIN_TAG: u64 = 0x7472_616e_736d_6131; // "transma1"

pub fn stream(seed: u64, replicate: u64, domain: u64, purpose: Purpose) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replicate.to_le_bytes());
    key[16..24].copy_from_slice(&DOMAIN_TAG.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream((domain << 8) | purpose as u64);
    rng
}
