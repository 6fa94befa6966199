use sha2::{Digest, Sha256};

use crate::env::Transition;
use crate::error::{Error, Result};
use crate::sharing::HasBuffer;

/// First 128 bits of SHA-256 over the transition's canonical encoding.
/// For n distinct transitions the collision probability is about n^2 / 2^129.
pub type Fingerprint = u128;

pub fn fingerprint(t: &Transition) -> Fingerprint {
    let digest = Sha256::digest(t.canonical_bytes());
    let mut head = [0u8; 16];
    head.copy_from_slice(&digest[..16]);
    u128::from_be_bytes(head)
}

/// Fingerprint multisets of every agent's replay buffer at one training step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BufferSnapshot {
    pub step: u64,
    pub buffers: Vec<Vec<Fingerprint>>,
}

const MAGIC: &[u8; 8] = b"GCSNAP1\n";

impl BufferSnapshot {
    pub fn capture<A: HasBuffer>(step: u64, agents: &[A]) -> Self {
        BufferSnapshot {
            step,
            buffers: agents
                .iter()
                .map(|a| a.buffer().iter().map(fingerprint).collect())
                .collect(),
        }
    }

    /// Layout (little endian): magic, u64 step, u32 agent count, then per
    /// agent a u32 entry count followed by 16-byte big-endian fingerprints.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&(self.buffers.len() as u32).to_le_bytes());
        for buf in &self.buffers {
            out.extend_from_slice(&(buf.len() as u32).to_le_bytes());
            for fp in buf {
                out.extend_from_slice(&fp.to_be_bytes());
            }
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Decode(format!("truncated at byte {}", self.pos)))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Decodes a concatenation of encoded snapshots.
pub fn decode_snapshots(data: &[u8]) -> Result<Vec<BufferSnapshot>> {
    let mut r = Reader { data, pos: 0 };
    let mut out = Vec::new();
    while r.pos < data.len() {
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Decode(format!("bad magic at byte {}", r.pos - MAGIC.len())));
        }
        let step = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let agents = r.u32()? as usize;
        let mut buffers = Vec::with_capacity(agents.min(1024));
        for _ in 0..agents {
            let n = r.u32()? as usize;
            let raw = r.take(n.checked_mul(16).ok_or_else(|| Error::Decode("entry count overflow".into()))?)?;
            buffers.push(
                raw.chunks_exact(16)
                    .map(|c| u128::from_be_bytes(c.try_into().unwrap()))
                    .collect(),
            );
        }
        out.push(BufferSnapshot { step, buffers });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::BitObs;

    fn t(reward: f64, terminal: bool) -> Transition {
        Transition {
            state: BitObs::zeros(8),
            action: 1,
            next_state: BitObs::zeros(8),
            reward,
            terminal,
        }
    }

    #[test]
    fn fingerprint_separates_fields() {
        assert_eq!(fingerprint(&t(1.0, false)), fingerprint(&t(1.0, false)));
        assert_ne!(fingerprint(&t(1.0, false)), fingerprint(&t(1.0, true)));
        assert_ne!(fingerprint(&t(1.0, false)), fingerprint(&t(2.0, false)));
    }

    #[test]
    fn binary_roundtrip() {
        let a = BufferSnapshot {
            step: 2000,
            buffers: vec![vec![1, u128::MAX], vec![], vec![7; 3]],
        };
        let b = BufferSnapshot {
            step: 4000,
            buffers: vec![],
        };
        let mut bytes = a.encode();
        b.encode_into(&mut bytes);
        assert_eq!(decode_snapshots(&bytes).unwrap(), vec![a, b]);
        assert_eq!(decode_snapshots(&[]).unwrap(), vec![]);
    }

    #[test]
    fn rejects_damage() {
        let bytes = BufferSnapshot {
            step: 1,
            buffers: vec![vec![5]],
        }
        .encode();
        assert!(decode_snapshots(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_snapshots(&bad).is_err());
        let mut huge = bytes[..20].to_vec();
        huge.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_snapshots(&huge).is_err());
    }
}
