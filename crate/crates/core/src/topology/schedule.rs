use rand::Rng;

use super::graph::SocialGraph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Visit {
    pub visitor: usize,
    /// Index of the host pair `{2h, 2h+1}`.
    pub host_pair: usize,
    pub remaining: u32,
}

/// Agents live in fixed pairs `{0,1}, {2,3}, ...`; at each episode boundary a
/// single agent may leave for another pair for `visit_len` episodes.
///
/// While visiting, the visitor is linked to both host members instead of its
/// partner, who is left isolated. Only one visit runs at a time.
#[derive(Clone, Debug, PartialEq)]
pub struct BoydScheduler {
    k: usize,
    visit_prob: f64,
    visit_len: u32,
    visit: Option<Visit>,
}

impl BoydScheduler {
    pub fn new(k: usize, visit_prob: f64, visit_len: u32) -> Result<Self> {
        if k == 0 || k % 2 != 0 {
            return Err(Error::invalid(format!(
                "dynamic pairing needs an even, positive agent count, got {k}"
            )));
        }
        if !(0.0..=1.0).contains(&visit_prob) {
            return Err(Error::invalid(format!("visit probability {visit_prob} outside [0, 1]")));
        }
        if visit_len == 0 {
            return Err(Error::invalid("visit duration must be >= 1 episode"));
        }
        Ok(BoydScheduler {
            k,
            visit_prob,
            visit_len,
            visit: None,
        })
    }

    pub fn active_visit(&self) -> Option<Visit> {
        self.visit
    }

    pub fn active_visits(&self) -> usize {
        usize::from(self.visit.is_some())
    }

    /// Starts a visit immediately, replacing any running one.
    pub fn force_visit(&mut self, visitor: usize, host_pair: usize) -> Result<SocialGraph> {
        if visitor >= self.k || host_pair >= self.k / 2 || visitor / 2 == host_pair {
            return Err(Error::invalid(format!(
                "agent {visitor} cannot visit pair {host_pair}"
            )));
        }
        self.visit = Some(Visit {
            visitor,
            host_pair,
            remaining: self.visit_len,
        });
        Ok(self.graph())
    }

    /// Advances one episode and returns the graph for it.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SocialGraph {
        let pairs = self.k / 2;
        match &mut self.visit {
            Some(v) => {
                v.remaining -= 1;
                if v.remaining == 0 {
                    self.visit = None;
                }
            }
            None => {
                if pairs >= 2 && rng.random::<f64>() < self.visit_prob {
                    let visitor = rng.random_range(0..self.k);
                    let mut host_pair = rng.random_range(0..pairs - 1);
                    if host_pair >= visitor / 2 {
                        host_pair += 1;
                    }
                    self.visit = Some(Visit {
                        visitor,
                        host_pair,
                        remaining: self.visit_len,
                    });
                }
            }
        }
        self.graph()
    }

    pub fn graph(&self) -> SocialGraph {
        let mut g = SocialGraph::empty(self.k);
        for p in 0..self.k / 2 {
            g.add_edge(2 * p, 2 * p + 1);
        }
        if let Some(v) = self.visit {
            g.remove_edge(v.visitor, v.visitor ^ 1);
            g.add_edge(v.visitor, 2 * v.host_pair);
            g.add_edge(v.visitor, 2 * v.host_pair + 1);
        }
        g
    }
}

/// Alternates `high_len` fully connected episodes with `low_len` episodes without edges.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicScheduler {
    k: usize,
    high_len: u32,
    low_len: u32,
    clock: u64,
}

impl PeriodicScheduler {
    pub fn new(k: usize, high_len: u32, low_len: u32) -> Result<Self> {
        if high_len == 0 || low_len == 0 {
            return Err(Error::invalid("periodic phase lengths must be >= 1"));
        }
        Ok(PeriodicScheduler {
            k,
            high_len,
            low_len,
            clock: 0,
        })
    }

    pub fn step(&mut self) -> SocialGraph {
        let phase = self.clock % u64::from(self.high_len + self.low_len);
        self.clock += 1;
        if phase < u64::from(self.high_len) {
            SocialGraph::fully_connected(self.k)
        } else {
            SocialGraph::empty(self.k)
        }
    }
}

/// Produces the social graph for each episode.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheduler {
    Static(SocialGraph),
    Boyd(BoydScheduler),
    Periodic(PeriodicScheduler),
}

impl Scheduler {
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> SocialGraph {
        match self {
            Scheduler::Static(g) => g.clone(),
            Scheduler::Boyd(b) => b.step(rng),
            Scheduler::Periodic(p) => p.step(),
        }
    }
}
