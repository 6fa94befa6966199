//! Episode-barrier experience exchange between neighbouring agents.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Transition;
use crate::error::{Error, Result};
use crate::qlearner::{DqnAgent, ReplayBuffer};
use crate::topology::SocialGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ShareMode {
    #[default]
    Uniform,
    Prioritized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharingConfig {
    pub probability: f64,
    pub batch_len: usize,
    pub mode: ShareMode,
}

impl Default for SharingConfig {
    fn default() -> Self {
        SharingConfig {
            probability: 1.0,
            batch_len: 6,
            mode: ShareMode::Uniform,
        }
    }
}

impl SharingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::invalid(format!(
                "share probability {} outside [0, 1]",
                self.probability
            )));
        }
        if self.batch_len == 0 {
            return Err(Error::invalid("shared batch length must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShareRecord {
    pub sender: usize,
    pub receiver: usize,
    pub count: usize,
}

pub trait HasBuffer {
    fn buffer(&self) -> &ReplayBuffer;
    fn buffer_mut(&mut self) -> &mut ReplayBuffer;
}

impl HasBuffer for ReplayBuffer {
    fn buffer(&self) -> &ReplayBuffer {
        self
    }
    fn buffer_mut(&mut self) -> &mut ReplayBuffer {
        self
    }
}

impl HasBuffer for DqnAgent {
    fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }
    fn buffer_mut(&mut self) -> &mut ReplayBuffer {
        &mut self.buffer
    }
}

/// One sharing round over `graph`.
///
/// Agents draw in ascending id order. Every outgoing sample is taken from the
/// buffers as they stood at the barrier, so a transition received this round
/// is never forwarded in the same round. Deliveries are then applied in the
/// same (sender, receiver) order as the log.
pub fn share_phase<A: HasBuffer, R: Rng + ?Sized>(
    agents: &mut [A],
    graph: &SocialGraph,
    cfg: &SharingConfig,
    rng: &mut R,
) -> Result<Vec<ShareRecord>> {
    if agents.len() != graph.agents() {
        return Err(Error::Shape {
            expected: graph.agents(),
            actual: agents.len(),
        });
    }
    let mut log = Vec::new();
    let mut outgoing: Vec<(usize, Vec<Transition>)> = Vec::new();
    for (k, agent) in agents.iter().enumerate() {
        if !rng.random_bool(cfg.probability) {
            continue;
        }
        let buf = agent.buffer();
        for n in graph.neighbors(k) {
            let count = cfg.batch_len.min(buf.len());
            let batch = if count == 0 {
                Vec::new()
            } else {
                let slots = match cfg.mode {
                    ShareMode::Uniform => buf.sample_uniform(count, rng)?,
                    ShareMode::Prioritized => buf.sample_proportional(count, rng)?.0,
                };
                slots.into_iter().map(|s| buf.get(s).clone()).collect()
            };
            log.push(ShareRecord {
                sender: k,
                receiver: n,
                count,
            });
            outgoing.push((n, batch));
        }
    }
    for (n, batch) in outgoing {
        let buf = agents[n].buffer_mut();
        for t in batch {
            buf.insert(t);
        }
    }
    Ok(log)
}
