//! Deterministic random substreams.
//!
//! Every random quantity is drawn from its own ChaCha8 stream keyed by
//! `(seed, domain, i, j)`, so results do not depend on how work is split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domain for trend scenario draws, keyed by scenario index.
pub const DOMAIN_TREND: u64 = 0x7472_656e_6400_0001;
/// Stream domain for lifetime simulation, keyed by (scenario, inner) index.
pub const DOMAIN_LIFETIME: u64 = 0x6c69_6665_0000_0002;

pub type StreamRng = ChaCha8Rng;

pub fn substream(seed: u64, domain: u64, i: u64, j: u64) -> StreamRng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, domain, i, j]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Stream for the trend draw of scenario `scenario`.
pub fn trend_stream(seed: u64, scenario: u64) -> StreamRng {
    substream(seed, DOMAIN_TREND, scenario, 0)
}

/// Stream for lifetime sample `inner` of scenario `scenario`.
pub fn lifetime_stream(seed: u64, scenario: u64, inner: u64) -> StreamRng {
    substream(seed, DOMAIN_LIFETIME, scenario, inner)
}
