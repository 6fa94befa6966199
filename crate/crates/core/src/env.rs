//! Shared environment plumbing: binary observations, experience tuples and
//! the episodic interface both test-beds implement.

use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Fixed-length binary vector. Every observation in this crate is binary, so
/// transitions store them packed and the learner unpacks on demand.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitObs {
    len: u32,
    words: Vec<u64>,
}

impl BitObs {
    pub fn zeros(len: usize) -> Self {
        BitObs {
            len: len as u32,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len(), "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    /// `self` with `other` appended.
    pub fn concat(&self, other: &BitObs) -> BitObs {
        let mut out = BitObs::zeros(self.len() + other.len());
        for i in self.ones() {
            out.set(i, true);
        }
        for i in other.ones() {
            out.set(self.len() + i, true);
        }
        out
    }

    /// Writes the vector as 0/1 values into `out`, which must have length `len()`.
    pub fn write_dense<F: From<u8> + Copy>(&self, out: &mut [F]) {
        debug_assert_eq!(out.len(), self.len());
        out.fill(F::from(0));
        for i in self.ones() {
            out[i] = F::from(1);
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        for i in self.ones() {
            v[i] = 1.0;
        }
        v
    }

    pub(crate) fn encode_into(&self, buf: &mut Vec<u8>) {
        buf.extend_from_slice(&self.len.to_le_bytes());
        for w in &self.words {
            buf.extend_from_slice(&w.to_le_bytes());
        }
    }
}

/// One experience tuple `(s, a, s', r, terminal)`: the unit of storage and of sharing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Transition {
    pub state: BitObs,
    pub action: u32,
    pub next_state: BitObs,
    pub reward: f64,
    pub terminal: bool,
}

impl PartialEq for Transition {
    fn eq(&self, other: &Self) -> bool {
        self.state == other.state
            && self.action == other.action
            && self.next_state == other.next_state
            && self.reward.to_bits() == other.reward.to_bits()
            && self.terminal == other.terminal
    }
}

impl Eq for Transition {}

impl Hash for Transition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.state.hash(state);
        self.action.hash(state);
        self.next_state.hash(state);
        self.reward.to_bits().hash(state);
        self.terminal.hash(state);
    }
}

impl Transition {
    /// Canonical byte encoding used for fingerprinting.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64);
        self.state.encode_into(&mut buf);
        buf.extend_from_slice(&self.action.to_le_bytes());
        self.next_state.encode_into(&mut buf);
        buf.extend_from_slice(&self.reward.to_bits().to_le_bytes());
        buf.push(self.terminal as u8);
        buf
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub observation: BitObs,
    pub reward: f64,
    pub terminal: bool,
}

/// Episodic, fully observable environment with a discrete action space.
pub trait Environment {
    fn observation_len(&self) -> usize;

    fn action_count(&self) -> usize;

    fn reset(&mut self) -> BitObs;

    fn step(&mut self, action: usize) -> Result<Step>;

    /// Ordered achievements of the current episode (crafted elements or
    /// collected items). The last entry is the episode's "final element".
    fn trajectory(&self) -> &[u32];

    /// Best return reachable in one episode; used to normalize returns.
    fn optimal_return(&self) -> f64;
}
