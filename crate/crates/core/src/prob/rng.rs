//! Seedable random streams.
//!
//! A stream is identified by a master seed and a path of `(label, index)`
//! pairs. The path is folded into a 64-bit key with the SplitMix64
//! finalizer, and the key seeds a xoshiro256** generator (state expanded
//! with SplitMix64, as `rand_xoshiro::Xoshiro256StarStar::seed_from_u64`
//! does). Any implementation of those two published algorithms reproduces
//! the same draws, which is what golden transcripts depend on.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(key: u64, word: u64) -> u64 {
    mix64(key.wrapping_add(GOLDEN_GAMMA) ^ word)
}

/// Identity of a stream: master seed plus derivation path.
#[serde_as]
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    #[serde_as(as = "DisplayFromStr")]
    pub master_seed: u64,
    pub path: Vec<(String, u64)>,
}

impl StreamId {
    /// Folds the seed and path into the generator key.
    pub fn key(&self) -> u64 {
        let mut key = mix64(self.master_seed ^ 0x5EED_0F5E_ED0F_5EED);
        for (label, index) in &self.path {
            for b in label.as_bytes() {
                key = absorb(key, *b as u64);
            }
            key = absorb(key, 0xFF00 | label.len() as u64);
            key = absorb(key, *index);
        }
        key
    }
}

impl fmt::Display for StreamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.master_seed)?;
        for (label, index) in &self.path {
            write!(f, "/{label}:{index}")?;
        }
        Ok(())
    }
}

/// A single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngState {
    id: StreamId,
    gen: Xoshiro256StarStar,
    draws: u64,
}

impl RngState {
    pub fn new(master_seed: u64) -> Self {
        Self::from_id(StreamId { master_seed, path: Vec::new() })
    }

    pub fn from_id(id: StreamId) -> Self {
        let gen = Xoshiro256StarStar::seed_from_u64(id.key());
        Self { id, gen, draws: 0 }
    }

    pub fn id(&self) -> &StreamId {
        &self.id
    }

    /// Number of 64-bit words consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Child stream; depends only on this stream's identity, never on how
    /// far it has advanced.
    pub fn substream(&self, label: &str, index: u64) -> RngState {
        let mut id = self.id.clone();
        id.path.push((String::from(label), index));
        Self::from_id(id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.gen.next_u64()
    }

    /// Uniform on the open interval (0, 1): 53-bit grid shifted by half a step.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [low, high).
    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform index in `0..n` from one draw (multiply-shift). `n` must be > 0.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
