//! Innovation tasks: recipe books over a dense element space, the three task
//! families (single path, merging paths, best-of-n) and an exact solver.

mod builders;
mod format;
mod solver;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builders::{
    build_best_of_n, build_merging_paths, build_single_path, BestOfN, MergingPaths, SinglePath,
    DEFAULT_OPTIMAL_SCALE,
};
pub use format::{parse_task, write_task};
pub use solver::{solve_optimal, Solution, DEFAULT_STATE_BUDGET};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementId(pub u32);

impl ElementId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: ElementId,
    /// Display label: `a1`..`a3` for base elements, `A1`.. for crafted ones.
    pub name: String,
    /// Uppercase letter of the path the element belongs to.
    pub path: char,
    /// Position on the path; 0 for base elements.
    pub rank: u32,
    pub level: u32,
}

impl Element {
    pub fn is_base(&self) -> bool {
        self.rank == 0
    }
}

/// Unordered-pair recipe table together with the initial set and per-element rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct RecipeBook {
    elements: Vec<Element>,
    recipes: BTreeMap<(ElementId, ElementId), ElementId>,
    parents: Vec<Option<(ElementId, ElementId)>>,
    initial_set: Vec<ElementId>,
    rewards: Vec<f64>,
}

fn pair_key(a: ElementId, b: ElementId) -> (ElementId, ElementId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl RecipeBook {
    /// Validates and assembles a book. Stored levels must agree with the
    /// levels implied by the recipe graph.
    pub fn new(
        elements: Vec<Element>,
        recipes: impl IntoIterator<Item = (ElementId, ElementId, ElementId)>,
        initial_set: Vec<ElementId>,
        rewards: Vec<f64>,
    ) -> Result<Self> {
        let n = elements.len();
        if n == 0 {
            return Err(Error::invalid("recipe book has no elements"));
        }
        if n > u32::MAX as usize {
            return Err(Error::invalid("too many elements"));
        }
        for (i, e) in elements.iter().enumerate() {
            if e.id.index() != i {
                return Err(Error::invalid(format!(
                    "element ids must be contiguous: position {i} holds id {}",
                    e.id
                )));
            }
            if e.is_base() != (e.level == 0) {
                return Err(Error::invalid(format!(
                    "element {} has rank {} but level {}",
                    e.name, e.rank, e.level
                )));
            }
        }
        if rewards.len() != n {
            return Err(Error::invalid(format!(
                "{} rewards for {n} elements",
                rewards.len()
            )));
        }
        if let Some(r) = rewards.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::invalid(format!("reward {r} must be finite and >= 0")));
        }

        let mut table = BTreeMap::new();
        let mut parents = vec![None; n];
        for (a, b, z) in recipes {
            for id in [a, b, z] {
                if id.index() >= n {
                    return Err(Error::UnknownElement(id.0));
                }
            }
            if elements[z.index()].is_base() {
                return Err(Error::invalid(format!(
                    "base element {} cannot be crafted",
                    elements[z.index()].name
                )));
            }
            if table.insert(pair_key(a, b), z).is_some() {
                return Err(Error::invalid(format!("duplicate recipe for pair ({a}, {b})")));
            }
            if parents[z.index()].replace(pair_key(a, b)).is_some() {
                return Err(Error::invalid(format!(
                    "element {} is crafted by more than one recipe",
                    elements[z.index()].name
                )));
            }
        }
        if let Some(e) = elements
            .iter()
            .find(|e| !e.is_base() && parents[e.id.index()].is_none())
        {
            return Err(Error::invalid(format!("element {} has no recipe", e.name)));
        }

        let mut sorted_initial = initial_set.clone();
        sorted_initial.sort();
        sorted_initial.dedup();
        let bases: Vec<ElementId> = elements.iter().filter(|e| e.is_base()).map(|e| e.id).collect();
        if sorted_initial.len() != initial_set.len() || sorted_initial != bases {
            return Err(Error::invalid(
                "initial set must list every base element exactly once",
            ));
        }

        let book = RecipeBook {
            elements,
            recipes: table,
            parents,
            initial_set,
            rewards,
        };
        let levels = book.derived_levels()?;
        for e in &book.elements {
            if levels[e.id.index()] != e.level {
                return Err(Error::invalid(format!(
                    "element {} declares level {} but its recipe implies {}",
                    e.name,
                    e.level,
                    levels[e.id.index()]
                )));
            }
        }
        Ok(book)
    }

    /// Levels implied by the recipe graph: 0 for base elements, otherwise one
    /// more than the summed levels of the two ingredients.
    fn derived_levels(&self) -> Result<Vec<u32>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Visiting,
            Done(u32),
        }
        let n = self.elements.len();
        let mut marks = vec![Mark::Fresh; n];
        for root in 0..n {
            // Iterative post-order to survive long paths in externally supplied books.
            let mut stack = vec![(root, false)];
            while let Some((v, expanded)) = stack.pop() {
                match (marks[v], expanded) {
                    (Mark::Done(_), _) => {}
                    (Mark::Visiting, false) => {
                        return Err(Error::invalid("recipe graph contains a cycle"));
                    }
                    (_, true) => {
                        let level = match self.parents[v] {
                            None => 0,
                            Some((a, b)) => {
                                let la = match marks[a.index()] {
                                    Mark::Done(l) => l,
                                    _ => return Err(Error::invalid("recipe graph contains a cycle")),
                                };
                                let lb = match marks[b.index()] {
                                    Mark::Done(l) => l,
                                    _ => return Err(Error::invalid("recipe graph contains a cycle")),
                                };
                                la.checked_add(lb)
                                    .and_then(|s| s.checked_add(1))
                                    .ok_or_else(|| Error::invalid("innovation level overflow"))?
                            }
                        };
                        marks[v] = Mark::Done(level);
                    }
                    (Mark::Fresh, false) => {
                        marks[v] = Mark::Visiting;
                        stack.push((v, true));
                        if let Some((a, b)) = self.parents[v] {
                            for p in [a, b] {
                                match marks[p.index()] {
                                    Mark::Done(_) => {}
                                    Mark::Visiting => {
                                        return Err(Error::invalid("recipe graph contains a cycle"))
                                    }
                                    Mark::Fresh => stack.push((p.index(), false)),
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(marks
            .into_iter()
            .map(|m| match m {
                Mark::Done(l) => l,
                _ => unreachable!("every element is resolved"),
            })
            .collect())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: ElementId) -> Result<&Element> {
        self.elements
            .get(id.index())
            .ok_or(Error::UnknownElement(id.0))
    }

    pub fn initial_set(&self) -> &[ElementId] {
        &self.initial_set
    }

    pub fn reward(&self, id: ElementId) -> f64 {
        self.rewards[id.index()]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Symmetric lookup of the element crafted from `a` and `b`.
    pub fn lookup(&self, a: ElementId, b: ElementId) -> Option<ElementId> {
        self.recipes.get(&pair_key(a, b)).copied()
    }

    /// Ingredients of a crafted element.
    pub fn recipe_for(&self, z: ElementId) -> Option<(ElementId, ElementId)> {
        self.parents.get(z.index()).copied().flatten()
    }

    /// `(a, b, z)` triples with `a <= b`, ordered by key.
    pub fn recipes(&self) -> impl Iterator<Item = (ElementId, ElementId, ElementId)> + '_ {
        self.recipes.iter().map(|(&(a, b), &z)| (a, b, z))
    }

    pub fn crafted(&self) -> impl Iterator<Item = &Element> + '_ {
        self.elements.iter().filter(|e| !e.is_base())
    }

    pub fn find(&self, name: &str) -> Option<ElementId> {
        self.elements.iter().find(|e| e.name == name).map(|e| e.id)
    }

    /// True when crafting always pays more than each crafted ingredient and
    /// rewards strictly increase along every path.
    pub fn rewards_follow_hierarchy(&self) -> bool {
        self.crafted().all(|e| {
            let (a, b) = self.recipe_for(e.id).expect("crafted elements have recipes");
            let r = self.reward(e.id);
            r > 0.0
                && [a, b]
                    .iter()
                    .all(|&p| self.elements[p.index()].is_base() || self.reward(p) < r)
        }) && self.crafted().all(|x| {
            self.crafted()
                .filter(|y| y.path == x.path && y.level > x.level)
                .all(|y| self.reward(y.id) > self.reward(x.id))
        })
    }
}

/// Innovation level of an element, derived from the recipe graph: 0 for base
/// elements, otherwise one more than the summed levels of its ingredients.
pub fn innovation_level(id: ElementId, book: &RecipeBook) -> Result<u32> {
    book.element(id)?;
    Ok(book.derived_levels()?[id.index()])
}

/// A recipe book plus the episode horizon (in selection actions).
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub book: RecipeBook,
    pub horizon: u32,
    pub optimal_return: f64,
    /// Intended optimal trajectory used to size the default horizon.
    pub optimal_trajectory: Vec<ElementId>,
}

impl TaskSpec {
    /// Builds a task and fills `optimal_return` and the optimal trajectory with the exact solver.
    pub fn solved(name: impl Into<String>, book: RecipeBook, horizon: u32) -> Result<Self> {
        if horizon % 2 != 0 {
            return Err(Error::invalid(format!(
                "horizon {horizon} must be even (two selections per craft)"
            )));
        }
        let mut task = TaskSpec {
            name: name.into(),
            book,
            horizon,
            optimal_return: 0.0,
            optimal_trajectory: Vec::new(),
        };
        let sol = solve_optimal(&task)?;
        task.optimal_return = sol.total_return;
        task.optimal_trajectory = sol.trajectory;
        Ok(task)
    }

    /// Same book, new horizon; re-solves.
    pub fn with_horizon(&self, horizon: u32) -> Result<Self> {
        TaskSpec::solved(self.name.clone(), self.book.clone(), horizon)
    }

    pub fn element_count(&self) -> usize {
        self.book.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(id: u32, name: &str, rank: u32, level: u32) -> Element {
        Element {
            id: ElementId(id),
            name: name.into(),
            path: name.chars().next().unwrap().to_ascii_uppercase(),
            rank,
            level,
        }
    }

    fn tiny() -> (Vec<Element>, Vec<(ElementId, ElementId, ElementId)>) {
        (
            vec![el(0, "a1", 0, 0), el(1, "a2", 0, 0), el(2, "A1", 1, 1)],
            vec![(ElementId(1), ElementId(0), ElementId(2))],
        )
    }

    #[test]
    fn lookup_is_symmetric() {
        let (els, rec) = tiny();
        let book = RecipeBook::new(els, rec, vec![ElementId(0), ElementId(1)], vec![0.0, 0.0, 1.0])
            .unwrap();
        assert_eq!(book.lookup(ElementId(0), ElementId(1)), Some(ElementId(2)));
        assert_eq!(book.lookup(ElementId(1), ElementId(0)), Some(ElementId(2)));
        assert_eq!(book.lookup(ElementId(0), ElementId(0)), None);
    }

    #[test]
    fn rejects_duplicate_outputs_and_bad_levels() {
        let (mut els, mut rec) = tiny();
        rec.push((ElementId(0), ElementId(0), ElementId(2)));
        let err = RecipeBook::new(els.clone(), rec, vec![ElementId(0), ElementId(1)], vec![0.0; 3]);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));

        els[2].level = 4;
        let (_, rec) = tiny();
        let err = RecipeBook::new(els, rec, vec![ElementId(0), ElementId(1)], vec![0.0; 3]);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rejects_cycles() {
        let els = vec![el(0, "a1", 0, 0), el(1, "A1", 1, 1), el(2, "A2", 2, 2)];
        let rec = vec![
            (ElementId(0), ElementId(2), ElementId(1)),
            (ElementId(0), ElementId(1), ElementId(2)),
        ];
        let err = RecipeBook::new(els, rec, vec![ElementId(0)], vec![0.0, 1.0, 2.0]);
        assert!(err.is_err());
    }

    #[test]
    fn unknown_element_level_is_not_found() {
        let (els, rec) = tiny();
        let book = RecipeBook::new(els, rec, vec![ElementId(0), ElementId(1)], vec![0.0, 0.0, 1.0])
            .unwrap();
        assert!(matches!(
            innovation_level(ElementId(9), &book),
            Err(Error::UnknownElement(9))
        ));
        assert_eq!(innovation_level(ElementId(0), &book).unwrap(), 0);
        assert_eq!(innovation_level(ElementId(2), &book).unwrap(), 1);
    }

    #[test]
    fn odd_horizon_rejected() {
        let (els, rec) = tiny();
        let book = RecipeBook::new(els, rec, vec![ElementId(0), ElementId(1)], vec![0.0, 0.0, 1.0])
            .unwrap();
        assert!(TaskSpec::solved("t", book, 3).is_err());
    }
}
