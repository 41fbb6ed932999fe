//! Counter-based random streams.
//!
//! Every random quantity in the simulator is addressed by `(seed, domain, index)`.
//! The seed and domain select a ChaCha8 key, the index selects one of its 2^64
//! streams, so any frame or noise sample can be drawn without producing the
//! ones before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Domain {
    Speckle,
    Noise,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Speckle => 0x5350_454b_4c45_0001,
            Domain::Noise => 0x4e4f_4953_4500_0002,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for element `index` of `domain` under `seed`.
pub(crate) fn indexed_rng(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain.tag();
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
