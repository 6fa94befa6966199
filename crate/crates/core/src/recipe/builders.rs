use super::{Element, ElementId, RecipeBook, TaskSpec};
use crate::error::{Error, Result};

/// Reward multiplier applied to the optimal path of a best-of-n task.
pub const DEFAULT_OPTIMAL_SCALE: f64 = 1.5;

const BASES_PER_PATH: u32 = 3;

#[derive(Default)]
struct Draft {
    elements: Vec<Element>,
    recipes: Vec<(ElementId, ElementId, ElementId)>,
    rewards: Vec<f64>,
}

impl Draft {
    fn push(&mut self, name: String, path: char, rank: u32, level: u32, reward: f64) -> ElementId {
        let id = ElementId(self.elements.len() as u32);
        self.elements.push(Element {
            id,
            name,
            path,
            rank,
            level,
        });
        self.rewards.push(reward);
        id
    }

    /// The three base elements `x1..x3` of path `X`.
    fn bases(&mut self, path: char) -> [ElementId; 3] {
        let lower = path.to_ascii_lowercase();
        [1, 2, 3].map(|i| self.push(format!("{lower}{i}"), path, 0, 0, 0.0))
    }

    fn craft(
        &mut self,
        path: char,
        rank: u32,
        level: u32,
        reward: f64,
        a: ElementId,
        b: ElementId,
    ) -> ElementId {
        let z = self.push(format!("{path}{rank}"), path, rank, level, reward);
        self.recipes.push((a, b, z));
        z
    }

    /// Crafts a plain path `X1..Xlen` from its own bases: X1 = x1 + x2, then
    /// each step adds a base element chosen round-robin.
    fn path(
        &mut self,
        path: char,
        bases: [ElementId; 3],
        len: u32,
        reward: impl Fn(u32) -> f64,
    ) -> Vec<ElementId> {
        let mut out = Vec::with_capacity(len as usize);
        let mut prev = self.craft(path, 1, 1, reward(1), bases[0], bases[1]);
        out.push(prev);
        for rank in 2..=len {
            let base = bases[(rank % BASES_PER_PATH) as usize];
            prev = self.craft(path, rank, rank, reward(rank), prev, base);
            out.push(prev);
        }
        out
    }

    fn into_book(self) -> Result<RecipeBook> {
        let initial = self
            .elements
            .iter()
            .filter(|e| e.is_base())
            .map(|e| e.id)
            .collect();
        RecipeBook::new(self.elements, self.recipes, initial, self.rewards)
    }
}

/// One path `A1..A_length` over the initial set `{a1, a2, a3}`; reward equals level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SinglePath {
    pub length: u32,
}

impl Default for SinglePath {
    fn default() -> Self {
        SinglePath { length: 8 }
    }
}

impl SinglePath {
    pub fn build(&self) -> Result<TaskSpec> {
        if self.length == 0 {
            return Err(Error::invalid("single path length must be >= 1"));
        }
        let mut d = Draft::default();
        let bases = d.bases('A');
        d.path('A', bases, self.length, f64::from);
        TaskSpec::solved(
            format!("single-path-{}", self.length),
            d.into_book()?,
            2 * self.length,
        )
    }
}

pub fn build_single_path(length: u32) -> Result<TaskSpec> {
    SinglePath { length }.build()
}

/// Two paths A and B whose elements at `crossroad_rank` combine into C1.
///
/// Rewards on A and B equal the level; every C element pays the terminal
/// reward of A/B plus its own level, so the merged path is the global optimum
/// and a completed A or B is a local one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MergingPaths {
    pub branch_len: u32,
    pub crossroad_rank: u32,
    pub merged_len: u32,
}

impl Default for MergingPaths {
    fn default() -> Self {
        MergingPaths {
            branch_len: 8,
            crossroad_rank: 2,
            merged_len: 4,
        }
    }
}

impl MergingPaths {
    pub fn build(&self) -> Result<TaskSpec> {
        let MergingPaths {
            branch_len,
            crossroad_rank,
            merged_len,
        } = *self;
        if branch_len == 0 || crossroad_rank == 0 || merged_len == 0 {
            return Err(Error::invalid("merging-paths lengths must be >= 1"));
        }
        if crossroad_rank >= branch_len {
            return Err(Error::invalid(format!(
                "crossroad rank {crossroad_rank} must be below branch length {branch_len}"
            )));
        }
        let mut d = Draft::default();
        let a_bases = d.bases('A');
        let b_bases = d.bases('B');
        let a = d.path('A', a_bases, branch_len, f64::from);
        let b = d.path('B', b_bases, branch_len, f64::from);

        let terminal = f64::from(branch_len);
        let offset = 2 * crossroad_rank;
        let cross = (crossroad_rank - 1) as usize;
        let mut prev = d.craft('C', 1, offset + 1, terminal + f64::from(offset + 1), a[cross], b[cross]);
        let all_bases: Vec<ElementId> = a_bases.iter().chain(&b_bases).copied().collect();
        let mut last = prev;
        for rank in 2..=merged_len {
            let level = offset + rank;
            let base = all_bases[((rank - 2) as usize) % all_bases.len()];
            prev = d.craft('C', rank, level, terminal + f64::from(level), prev, base);
            last = prev;
        }

        let crafts = (offset + merged_len).max(branch_len);
        let task = TaskSpec::solved(
            format!("merging-paths-{branch_len}-{crossroad_rank}-{merged_len}"),
            d.into_book()?,
            2 * crafts,
        )?;
        if !task.optimal_trajectory.contains(&last) {
            return Err(Error::invalid(
                "these lengths do not make the merged path the global optimum",
            ));
        }
        Ok(task)
    }
}

pub fn build_merging_paths(branch_len: u32, crossroad_rank: u32, merged_len: u32) -> Result<TaskSpec> {
    MergingPaths {
        branch_len,
        crossroad_rank,
        merged_len,
    }
    .build()
}

/// `n_paths` disjoint paths; the one at `optimal_index` is longer and its
/// rewards are scaled by `optimal_scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestOfN {
    pub n_paths: u32,
    pub optimal_len: u32,
    pub suboptimal_len: u32,
    pub optimal_index: u32,
    pub optimal_scale: f64,
}

impl Default for BestOfN {
    fn default() -> Self {
        BestOfN {
            n_paths: 10,
            optimal_len: 5,
            suboptimal_len: 4,
            optimal_index: 1,
            optimal_scale: DEFAULT_OPTIMAL_SCALE,
        }
    }
}

impl BestOfN {
    pub fn build(&self) -> Result<TaskSpec> {
        let BestOfN {
            n_paths,
            optimal_len,
            suboptimal_len,
            optimal_index,
            optimal_scale,
        } = *self;
        if !(2..=26).contains(&n_paths) {
            return Err(Error::invalid(format!("n_paths {n_paths} must be in 2..=26")));
        }
        if suboptimal_len == 0 || optimal_len <= suboptimal_len {
            return Err(Error::invalid(format!(
                "optimal length {optimal_len} must exceed suboptimal length {suboptimal_len} >= 1"
            )));
        }
        if optimal_index >= n_paths {
            return Err(Error::invalid(format!(
                "optimal index {optimal_index} out of range for {n_paths} paths"
            )));
        }
        if !optimal_scale.is_finite() || optimal_scale < 1.0 {
            return Err(Error::invalid("optimal reward scale must be >= 1"));
        }
        let letters: Vec<char> = (0..n_paths).map(|i| (b'A' + i as u8) as char).collect();
        let mut d = Draft::default();
        let bases: Vec<[ElementId; 3]> = letters.iter().map(|&p| d.bases(p)).collect();
        for (i, (&p, &b)) in letters.iter().zip(&bases).enumerate() {
            if i as u32 == optimal_index {
                d.path(p, b, optimal_len, |r| optimal_scale * f64::from(r));
            } else {
                d.path(p, b, suboptimal_len, f64::from);
            }
        }
        TaskSpec::solved(
            format!("best-of-{n_paths}"),
            d.into_book()?,
            2 * optimal_len,
        )
    }
}

pub fn build_best_of_n(
    n_paths: u32,
    optimal_len: u32,
    suboptimal_len: u32,
    optimal_index: u32,
) -> Result<TaskSpec> {
    BestOfN {
        n_paths,
        optimal_len,
        suboptimal_len,
        optimal_index,
        ..BestOfN::default()
    }
    .build()
}
