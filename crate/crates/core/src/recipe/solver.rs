use std::collections::HashMap;

use super::{ElementId, TaskSpec};
use crate::error::{Error, Result};

/// Memoized search states allowed before giving up.
pub const DEFAULT_STATE_BUDGET: usize = 4_000_000;

const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Crafted elements in crafting order.
    pub trajectory: Vec<ElementId>,
    pub total_return: f64,
}

struct Craft {
    id: u32,
    needs: u128,
    reward: f64,
}

struct Search<'a> {
    crafts: &'a [Craft],
    memo: HashMap<(u128, u32), (f64, Option<u32>)>,
    budget: usize,
}

impl Search<'_> {
    fn best(&mut self, inventory: u128, crafts_left: u32) -> Result<f64> {
        if crafts_left == 0 {
            return Ok(0.0);
        }
        if let Some(&(v, _)) = self.memo.get(&(inventory, crafts_left)) {
            return Ok(v);
        }
        let mut best = 0.0;
        let mut choice = None;
        let crafts = self.crafts;
        for c in crafts {
            let bit = 1u128 << c.id;
            if inventory & bit != 0 || inventory & c.needs != c.needs {
                continue;
            }
            let (reward, id) = (c.reward, c.id);
            let v = reward + self.best(inventory | bit, crafts_left - 1)?;
            // ascending id order plus strict improvement keeps the
            // lexicographically smallest optimal sequence
            if choice.is_none() || v > best + TIE_EPS {
                best = v;
                choice = Some(id);
            }
        }
        if self.memo.len() >= self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
            });
        }
        self.memo.insert((inventory, crafts_left), (best, choice));
        Ok(best)
    }
}

/// Maximum-return crafting sequence reachable within the task horizon.
///
/// Each craft attempt costs two selection actions and only first-time crafts
/// pay, so the search runs over sets of newly crafted elements.
pub fn solve_optimal(task: &TaskSpec) -> Result<Solution> {
    solve_with_budget(task, DEFAULT_STATE_BUDGET)
}

pub fn solve_with_budget(task: &TaskSpec, budget: usize) -> Result<Solution> {
    let book = &task.book;
    if book.len() > 128 {
        return Err(Error::invalid(format!(
            "exact search supports at most 128 elements, task has {}",
            book.len()
        )));
    }
    let crafts: Vec<Craft> = book
        .crafted()
        .map(|e| {
            let (a, b) = book.recipe_for(e.id).expect("crafted elements have recipes");
            Craft {
                id: e.id.0,
                needs: (1u128 << a.0) | (1u128 << b.0),
                reward: book.reward(e.id),
            }
        })
        .collect();
    let start = book
        .initial_set()
        .iter()
        .fold(0u128, |m, id| m | (1u128 << id.0));
    let mut search = Search {
        crafts: &crafts,
        memo: HashMap::new(),
        budget,
    };
    let total_return = search.best(start, task.horizon / 2)?;

    let mut trajectory = Vec::new();
    let mut inventory = start;
    let mut left = task.horizon / 2;
    while left > 0 {
        match search.memo.get(&(inventory, left)) {
            Some(&(_, Some(id))) => {
                trajectory.push(ElementId(id));
                inventory |= 1u128 << id;
                left -= 1;
            }
            _ => break,
        }
    }
    Ok(Solution {
        trajectory,
        total_return,
    })
}
