//! Counter-derived random streams.
//!
//! Every unit of random work (one frame of one SNR point, one pilot channel
//! draw, ...) gets its own ChaCha8 stream keyed by `(master seed, domain)`
//! and selected by a 64-bit stream index. The sequence a unit sees depends
//! only on those three numbers, never on which worker runs it or when.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains used by the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Frames of the SNR point with this index.
    Frames(u32),
    /// Pilot channel draws used to pick a MIMO design mean.
    Pilot(u32),
    /// Channel draws for SINR statistics.
    SinrStats,
    /// Free-form domain for callers outside the simulation engine.
    User(u32),
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Frames(p) => (1 << 32) | u64::from(p),
            Domain::Pilot(p) => (2 << 32) | u64::from(p),
            Domain::SinrStats => 3 << 32,
            Domain::User(p) => (4 << 32) | u64::from(p),
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

/// Factory for independent, reproducible random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    master: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        StreamFactory { master: master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    /// The stream for unit `index` of `domain`.
    pub fn stream(&self, domain: Domain, index: u64) -> ChaCha8Rng {
        let mut state = self.master ^ splitmix64(&mut domain.tag());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}
