//! Per-item random streams.
//!
//! A stream is keyed by the string `"{global_seed}:{item_id}:{epoch}:{stage}"`.
//! Its 64-bit FNV-1a hash, little-endian, fills the first 8 bytes of a
//! 32-byte ChaCha12 key (rest zero); the generator then runs from counter 0.
//! Streams depend only on the key, never on call order or thread.

use std::hash::Hasher;

use fnv::FnvHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// 64-bit FNV-1a of `bytes`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub fn stream_key(global_seed: u64, item_id: &str, epoch: u64, stage: &str) -> String {
    format!("{global_seed}:{item_id}:{epoch}:{stage}")
}

pub fn stream_seed(global_seed: u64, item_id: &str, epoch: u64, stage: &str) -> u64 {
    fnv1a64(stream_key(global_seed, item_id, epoch, stage).as_bytes())
}

pub fn stream(global_seed: u64, item_id: &str, epoch: u64, stage: &str) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&stream_seed(global_seed, item_id, epoch, stage).to_le_bytes());
    ChaCha12Rng::from_seed(key)
}
