//! Performance, behavioural and replay-buffer metrics of a trial.

mod snapshot;
mod table;

pub use snapshot::{decode_snapshots, fingerprint, BufferSnapshot, Fingerprint};
pub use table::{read_metrics_csv, trial_metrics, write_metrics_csv, MetricRow, MetricTracker};

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "reached the optimum" on normalized returns.
pub const SUCCESS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentEval {
    /// Crafted (or collected) element ids in order.
    pub trajectory: Vec<u32>,
    /// Episode return divided by the task optimum.
    pub normalized_return: f64,
}

impl AgentEval {
    pub fn final_element(&self) -> Option<u32> {
        self.trajectory.last().copied()
    }

    pub fn succeeded(&self) -> bool {
        self.normalized_return >= 1.0 - SUCCESS_TOLERANCE
    }
}

/// Greedy evaluation of every agent at one training step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: u64,
    pub agents: Vec<AgentEval>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessTimes {
    pub first: u64,
    pub all: u64,
    pub spread: u64,
}

pub fn group_success(evals: &[EvalPoint]) -> Result<bool> {
    if evals.is_empty() || evals.iter().any(|p| p.agents.is_empty()) {
        return Err(Error::UndefinedMetric("group success needs evaluated agents".into()));
    }
    Ok(evals.iter().flat_map(|p| &p.agents).any(AgentEval::succeeded))
}

/// `(step, R+, R*)`: best and mean normalized return at every evaluation point.
pub fn reward_curves(evals: &[EvalPoint]) -> Vec<(u64, f64, f64)> {
    evals
        .iter()
        .filter(|p| !p.agents.is_empty())
        .map(|p| {
            let best = p.agents.iter().map(|a| a.normalized_return).fold(f64::NEG_INFINITY, f64::max);
            let mean = p.agents.iter().map(|a| a.normalized_return).sum::<f64>() / p.agents.len() as f64;
            (p.step, best, mean)
        })
        .collect()
}

/// Times of first success by any agent and by all agents; both default to `t_train`.
pub fn success_times(evals: &[EvalPoint], t_train: u64) -> SuccessTimes {
    let k = evals.iter().map(|p| p.agents.len()).max().unwrap_or(0);
    let mut hit: Vec<Option<u64>> = vec![None; k];
    for p in evals {
        for (i, a) in p.agents.iter().enumerate() {
            if hit[i].is_none() && a.succeeded() {
                hit[i] = Some(p.step);
            }
        }
    }
    let first = hit.iter().flatten().min().copied().unwrap_or(t_train);
    let all = if k > 0 && hit.iter().all(Option::is_some) {
        hit.iter().flatten().max().copied().unwrap()
    } else {
        t_train
    };
    SuccessTimes {
        first,
        all,
        spread: all - first,
    }
}

/// Largest fraction of agents that share the same final element. Agents that
/// crafted nothing form one cohort of their own.
pub fn conformity(point: &EvalPoint) -> Result<f64> {
    if point.agents.is_empty() {
        return Err(Error::UndefinedMetric("conformity of an empty group".into()));
    }
    let mut counts: HashMap<Option<u32>, usize> = HashMap::new();
    for a in &point.agents {
        *counts.entry(a.final_element()).or_default() += 1;
    }
    Ok(*counts.values().max().unwrap() as f64 / point.agents.len() as f64)
}

/// Cumulative count of trajectory changes between consecutive evaluations.
/// `V[0]` is always 0.
pub fn volatility<T: AsRef<[u32]>>(series: &[T]) -> Result<Vec<u64>> {
    if series.len() < 2 {
        return Err(Error::UndefinedMetric("volatility needs >= 2 evaluations".into()));
    }
    let mut v = 0;
    let mut out = vec![0];
    for w in series.windows(2) {
        v += u64::from(w[0].as_ref() != w[1].as_ref());
        out.push(v);
    }
    Ok(out)
}

fn unique(fps: &[Fingerprint]) -> HashSet<Fingerprint> {
    fps.iter().copied().collect()
}

pub fn diversity(buffer: &[Fingerprint]) -> usize {
    unique(buffer).len()
}

pub fn group_diversity(snapshot: &BufferSnapshot) -> usize {
    snapshot.buffers.iter().flatten().collect::<HashSet<_>>().len()
}

fn overlap(a: &HashSet<Fingerprint>, b: &HashSet<Fingerprint>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|f| large.contains(f)).count() as f64 / small.len() as f64
}

/// Mean pairwise overlap of unique buffer contents, normalised by the smaller set.
pub fn intra_alignment(snapshot: &BufferSnapshot) -> Result<f64> {
    let k = snapshot.buffers.len();
    if k < 2 {
        return Err(Error::UndefinedMetric("intra alignment needs >= 2 agents".into()));
    }
    if snapshot.buffers.iter().any(Vec::is_empty) {
        return Err(Error::UndefinedMetric("intra alignment with an empty buffer".into()));
    }
    let sets: Vec<_> = snapshot.buffers.iter().map(|b| unique(b)).collect();
    let mut total = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            total += overlap(&sets[i], &sets[j]);
        }
    }
    Ok(total / (k * (k - 1) / 2) as f64)
}

/// Overlap between the pooled buffers of two groups.
pub fn inter_alignment(a: &BufferSnapshot, b: &BufferSnapshot) -> Result<f64> {
    let pa: HashSet<_> = a.buffers.iter().flatten().copied().collect();
    let pb: HashSet<_> = b.buffers.iter().flatten().copied().collect();
    if pa.is_empty() || pb.is_empty() {
        return Err(Error::UndefinedMetric("inter alignment with an empty group".into()));
    }
    Ok(overlap(&pa, &pb))
}
