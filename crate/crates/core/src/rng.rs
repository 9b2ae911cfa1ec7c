//! Counter-based random streams.
//!
//! Every Monte Carlo path draws from its own ChaCha8 stream, addressed by
//! `(seed, domain, index)`. The key is a pure function of those three values,
//! so a path sees the same numbers no matter which worker runs it or in what
//! order. `domain` separates independent uses of the same seed (cycles,
//! perpetuity paths, direct crossing paths, ...).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream domains used by the engines. Distinct domains never share a key.
pub mod domain {
    pub const CYCLES: u32 = 1;
    pub const PERPETUITY: u32 = 2;
    pub const DIRECT: u32 = 3;
    pub const LOG_PRICE: u32 = 4;
    pub const HORIZON: u32 = 5;
    pub const SYNTHETIC: u32 = 6;
    pub const BOOTSTRAP: u32 = 7;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns the stream for path `index` within `domain`.
pub fn stream(seed: u64, domain: u32, index: u64) -> Stream {
    let mut state = seed ^ (u64::from(domain) << 32 | u64::from(domain));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
