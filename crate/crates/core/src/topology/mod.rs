//! Social graphs over agents and the per-episode schedulers that produce them.

mod graph;
mod schedule;

pub use graph::SocialGraph;
pub use schedule::{BoydScheduler, PeriodicScheduler, Scheduler, Visit};

use rand::Rng;

use crate::error::Result;

pub fn fully_connected(k: usize) -> SocialGraph {
    SocialGraph::fully_connected(k)
}

pub fn ring(k: usize) -> Result<SocialGraph> {
    SocialGraph::ring(k)
}

pub fn watts_strogatz<R: Rng + ?Sized>(k: usize, n: usize, beta: f64, rng: &mut R) -> Result<SocialGraph> {
    SocialGraph::watts_strogatz(k, n, beta, rng)
}
