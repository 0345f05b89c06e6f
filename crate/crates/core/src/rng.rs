//! Reproducible uniform streams.
//!
//! Every random quantity is drawn from a [`Stream`] keyed by
//! `(master seed, label, index, sub-stream)`. Keys are hashed into a
//! ChaCha8 seed, so a run's draws depend only on its key and never on the
//! order in which runs are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A source of uniforms on `[0, 1)`.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64, label: &str, index: u64, sub: u64) -> Self {
        let mut state = splitmix(seed ^ 0x6a09_e667_f3bc_c908);
        state = splitmix(state ^ fnv1a(label.as_bytes()));
        state = splitmix(state ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        state = splitmix(state ^ sub.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            state = splitmix(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self(ChaCha8Rng::from_seed(key))
    }
}

impl UniformSource for Stream {
    fn next_uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }
}

/// Seed for an independent family of streams, e.g. one per subcommand.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    splitmix(splitmix(seed ^ 0x3c6e_f372_fe94_f82b) ^ fnv1a(label.as_bytes()))
}

/// Replays a fixed list of uniforms cyclically.
#[derive(Debug, Clone)]
pub struct Replay {
    values: Vec<f64>,
    pos: usize,
}

impl Replay {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "replay needs at least one value");
        Self { values, pos: 0 }
    }
}

impl UniformSource for Replay {
    fn next_uniform(&mut self) -> f64 {
        let v = self.values[self.pos % self.values.len()];
        self.pos += 1;
        v
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
