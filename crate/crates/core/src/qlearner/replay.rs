use rand::seq::index;
use rand::Rng;

use crate::env::Transition;
use crate::error::{Error, Result};

/// Binary tree of partial sums over slot priorities.
#[derive(Clone, Debug)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        SumTree {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.nodes[self.leaves + slot]
    }

    pub fn set(&mut self, slot: usize, value: f64) {
        let mut i = self.leaves + slot;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Slot whose cumulative-priority interval contains `mass`.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut i = 1;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            if mass < left || self.nodes[2 * i + 1] <= 0.0 {
                i *= 2;
            } else {
                mass -= left;
                i = 2 * i + 1;
            }
        }
        i - self.leaves
    }
}

#[derive(Clone, Debug)]
struct Priorities {
    tree: SumTree,
    alpha: f64,
    max_priority: f64,
}

/// Floor added to |TD error| when refreshing priorities.
pub const PRIORITY_FLOOR: f64 = 1e-6;

/// FIFO ring of transitions with optional proportional priorities.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    cursor: usize,
    inserted: u64,
    priorities: Option<Priorities>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            items: Vec::with_capacity(capacity),
            capacity,
            cursor: 0,
            inserted: 0,
            priorities: None,
        }
    }

    /// Prioritized buffer sampling slot `i` with probability `p_i^alpha / sum_j p_j^alpha`.
    pub fn prioritized(capacity: usize, alpha: f64) -> Self {
        let mut b = ReplayBuffer::new(capacity);
        b.priorities = Some(Priorities {
            tree: SumTree::new(capacity),
            alpha,
            max_priority: 1.0,
        });
        b
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn is_prioritized(&self) -> bool {
        self.priorities.is_some()
    }

    pub fn get(&self, slot: usize) -> &Transition {
        &self.items[slot]
    }

    /// Transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.items.split_at(if self.len() == self.capacity {
            self.cursor
        } else {
            0
        });
        older.iter().chain(newer)
    }

    /// Appends, evicting the oldest entry at capacity. New entries receive the
    /// largest priority seen so far.
    pub fn insert(&mut self, t: Transition) {
        let slot = if self.items.len() < self.capacity {
            self.items.push(t);
            self.items.len() - 1
        } else {
            let slot = self.cursor;
            self.items[slot] = t;
            slot
        };
        self.cursor = (slot + 1) % self.capacity;
        self.inserted += 1;
        if let Some(p) = &mut self.priorities {
            p.tree.set(slot, p.max_priority.powf(p.alpha));
        }
    }

    /// Uniform slots: without replacement when `n <= len`, with replacement otherwise.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if n <= self.len() {
            Ok(index::sample(rng, self.len(), n).into_vec())
        } else {
            Ok((0..n).map(|_| rng.random_range(0..self.len())).collect())
        }
    }

    /// Priority-proportional slots (with replacement) and their sampling probabilities.
    /// Falls back to uniform probabilities for a non-prioritized buffer.
    pub fn sample_proportional<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<(Vec<usize>, Vec<f64>)> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let Some(p) = &self.priorities else {
            let slots = self.sample_uniform(n, rng)?;
            let prob = 1.0 / self.len() as f64;
            return Ok((slots, vec![prob; n]));
        };
        let total = p.tree.total();
        let mut slots = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        for _ in 0..n {
            let mass = rng.random::<f64>() * total;
            let slot = p.tree.find(mass).min(self.len() - 1);
            slots.push(slot);
            probs.push(p.tree.get(slot) / total);
        }
        Ok((slots, probs))
    }

    /// Sets slot priorities to `|td| + PRIORITY_FLOOR`.
    pub fn update_priorities(&mut self, slots: &[usize], td_errors: &[f64]) {
        if let Some(p) = &mut self.priorities {
            for (&slot, &td) in slots.iter().zip(td_errors) {
                let pr = td.abs() + PRIORITY_FLOOR;
                p.max_priority = p.max_priority.max(pr);
                p.tree.set(slot, pr.powf(p.alpha));
            }
        }
    }

    pub fn priority_weight(&self, slot: usize) -> Option<f64> {
        self.priorities.as_ref().map(|p| p.tree.get(slot))
    }
}
