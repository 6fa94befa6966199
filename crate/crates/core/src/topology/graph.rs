use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph over agents `0..k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SocialGraph {
    k: usize,
    adj: Vec<bool>,
}

impl SocialGraph {
    pub fn empty(k: usize) -> Self {
        SocialGraph {
            k,
            adj: vec![false; k * k],
        }
    }

    pub fn fully_connected(k: usize) -> Self {
        let mut g = SocialGraph::empty(k);
        for u in 0..k {
            for v in u + 1..k {
                g.add_edge(u, v);
            }
        }
        g
    }

    /// Cycle `0 - 1 - ... - (k-1) - 0`.
    pub fn ring(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::invalid(format!("ring needs at least 3 agents, got {k}")));
        }
        let mut g = SocialGraph::empty(k);
        for u in 0..k {
            g.add_edge(u, (u + 1) % k);
        }
        Ok(g)
    }

    /// Ring lattice in which every node links to its `n` nearest neighbours.
    pub fn ring_lattice(k: usize, n: usize) -> Result<Self> {
        if n % 2 != 0 || n >= k {
            return Err(Error::invalid(format!(
                "lattice degree {n} must be even and below {k}"
            )));
        }
        let mut g = SocialGraph::empty(k);
        for j in 1..=n / 2 {
            for u in 0..k {
                g.add_edge(u, (u + j) % k);
            }
        }
        Ok(g)
    }

    /// Watts-Strogatz small world: a ring lattice whose edges `(u, u+j)` each
    /// get their far endpoint rewired with probability `beta` to a uniformly
    /// chosen node that is neither `u` nor already adjacent to it.
    pub fn watts_strogatz<R: Rng + ?Sized>(k: usize, n: usize, beta: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::invalid(format!("rewiring probability {beta} outside [0, 1]")));
        }
        let mut g = SocialGraph::ring_lattice(k, n)?;
        for j in 1..=n / 2 {
            for u in 0..k {
                let v = (u + j) % k;
                if rng.random::<f64>() >= beta {
                    continue;
                }
                if g.degree(u) >= k - 1 {
                    continue;
                }
                let mut w = rng.random_range(0..k);
                while w == u || g.has_edge(u, w) {
                    w = rng.random_range(0..k);
                }
                g.remove_edge(u, v);
                g.add_edge(u, w);
            }
        }
        Ok(g)
    }

    pub fn agents(&self) -> usize {
        self.k
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.k + v]
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v, "self-loops are not allowed");
        self.adj[u * self.k + v] = true;
        self.adj[v * self.k + u] = true;
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.adj[u * self.k + v] = false;
        self.adj[v * self.k + u] = false;
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&v| self.has_edge(u, v))
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors(u).count()
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.k)
            .flat_map(|u| (u + 1..self.k).map(move |v| (u, v)))
            .filter(|&(u, v)| self.has_edge(u, v))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn is_simple_undirected(&self) -> bool {
        (0..self.k).all(|u| {
            !self.has_edge(u, u) && (0..self.k).all(|v| self.has_edge(u, v) == self.has_edge(v, u))
        })
    }

    /// One `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}
