//! Crafting MDP over a recipe book with two-step selection semantics.
//!
//! The first action of a pair selects an element (`current`), the second
//! combines it with the selected one. Observations are the inventory bits
//! followed by the current-selection bits.

use std::sync::Arc;

use crate::env::{BitObs, Environment, Step};
use crate::error::{Error, Result};
use crate::recipe::{ElementId, TaskSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub inventory: BitObs,
    pub current: Option<ElementId>,
}

impl Observation {
    /// Flat `inventory ⊕ current` vector of length `2 |X|`.
    pub fn flatten(&self) -> BitObs {
        let mut current = BitObs::zeros(self.inventory.len());
        if let Some(c) = self.current {
            current.set(c.index(), true);
        }
        self.inventory.concat(&current)
    }
}

#[derive(Clone, Debug)]
pub struct WordcraftEnv {
    task: Arc<TaskSpec>,
    inventory: BitObs,
    current: Option<ElementId>,
    steps: u32,
    trajectory: Vec<u32>,
    episode_return: f64,
}

impl WordcraftEnv {
    pub fn new(task: Arc<TaskSpec>) -> Self {
        let n = task.book.len();
        let mut env = WordcraftEnv {
            task,
            inventory: BitObs::zeros(n),
            current: None,
            steps: 0,
            trajectory: Vec::new(),
            episode_return: 0.0,
        };
        env.reset();
        env
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn observation(&self) -> Observation {
        Observation {
            inventory: self.inventory.clone(),
            current: self.current,
        }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn episode_return(&self) -> f64 {
        self.episode_return
    }

    pub fn is_terminal(&self) -> bool {
        self.steps >= self.task.horizon
    }

    fn combine(&mut self, first: ElementId, second: ElementId) -> f64 {
        if !self.inventory.get(first.index()) || !self.inventory.get(second.index()) {
            return 0.0;
        }
        match self.task.book.lookup(first, second) {
            Some(z) if !self.inventory.get(z.index()) => {
                self.inventory.set(z.index(), true);
                self.trajectory.push(z.0);
                self.task.book.reward(z)
            }
            _ => 0.0,
        }
    }
}

impl Environment for WordcraftEnv {
    fn observation_len(&self) -> usize {
        2 * self.task.book.len()
    }

    fn action_count(&self) -> usize {
        self.task.book.len()
    }

    fn reset(&mut self) -> BitObs {
        self.inventory = BitObs::zeros(self.task.book.len());
        for id in self.task.book.initial_set() {
            self.inventory.set(id.index(), true);
        }
        self.current = None;
        self.steps = 0;
        self.trajectory.clear();
        self.episode_return = 0.0;
        self.observation().flatten()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        let n = self.task.book.len();
        if action >= n {
            return Err(Error::InvalidAction {
                action,
                actions: n,
            });
        }
        if self.is_terminal() {
            return Err(Error::EpisodeOver);
        }
        let chosen = ElementId(action as u32);
        let reward = match self.current.take() {
            None => {
                self.current = Some(chosen);
                0.0
            }
            Some(first) => self.combine(first, chosen),
        };
        self.steps += 1;
        self.episode_return += reward;
        Ok(Step {
            observation: self.observation().flatten(),
            reward,
            terminal: self.is_terminal(),
        })
    }

    fn trajectory(&self) -> &[u32] {
        &self.trajectory
    }

    fn optimal_return(&self) -> f64 {
        self.task.optimal_return
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recipe::{build_single_path, Element, MergingPaths, RecipeBook};

    /// Seven-element toy book: Earth + Water -> Mud and a few follow-ups.
    fn toy_task() -> Arc<TaskSpec> {
        let names = ["Water", "Earth", "Mud", "Fire", "Steam", "Brick", "Clay"];
        let levels = [0, 0, 1, 0, 1, 2, 3];
        let elements = names
            .iter()
            .zip(levels)
            .enumerate()
            .map(|(i, (n, l))| Element {
                id: ElementId(i as u32),
                name: n.to_string(),
                path: 'A',
                rank: l,
                level: l,
            })
            .collect();
        let e = ElementId;
        let book = RecipeBook::new(
            elements,
            [
                (e(1), e(0), e(2)),
                (e(3), e(0), e(4)),
                (e(2), e(3), e(5)),
                (e(5), e(0), e(6)),
            ],
            vec![e(0), e(1), e(3)],
            vec![0.0, 0.0, 1.0, 0.0, 1.0, 2.0, 3.0],
        )
        .unwrap();
        Arc::new(TaskSpec::solved("toy", book, 8).unwrap())
    }

    #[test]
    fn earth_then_water_makes_mud() {
        let mut env = WordcraftEnv::new(toy_task());
        env.reset();
        let s1 = env.step(1).unwrap();
        assert_eq!(s1.reward, 0.0);
        assert_eq!(env.observation().current, Some(ElementId(1)));
        let s2 = env.step(0).unwrap();
        assert!(s2.reward > 0.0);
        assert!(env.observation().inventory.get(2));
        assert_eq!(env.observation().current, None);
        assert_eq!(env.trajectory(), &[2]);
    }

    #[test]
    fn self_combination_yields_nothing() {
        let mut env = WordcraftEnv::new(Arc::new(build_single_path(3).unwrap()));
        env.step(0).unwrap();
        let s = env.step(0).unwrap();
        assert_eq!(s.reward, 0.0);
        assert_eq!(env.observation().current, None);
    }

    #[test]
    fn repeated_recipe_pays_once() {
        let mut env = WordcraftEnv::new(toy_task());
        env.step(1).unwrap();
        assert!(env.step(0).unwrap().reward > 0.0);
        env.step(0).unwrap();
        assert_eq!(env.step(1).unwrap().reward, 0.0);
    }

    #[test]
    fn reset_sets_initial_inventory() {
        let mut env = WordcraftEnv::new(Arc::new(MergingPaths::default().build().unwrap()));
        let obs = env.reset();
        assert_eq!(obs.count_ones(), 6);
        assert_eq!(obs.len(), env.observation_len());
        assert_eq!(env.episode_return(), 0.0);

        let mut env = WordcraftEnv::new(Arc::new(build_single_path(8).unwrap()));
        assert_eq!(env.reset().count_ones(), 3);
    }

    #[test]
    fn missing_ingredient_never_crafts() {
        let mut env = WordcraftEnv::new(Arc::new(build_single_path(3).unwrap()));
        // A1 (id 3) is not in the inventory yet
        env.step(3).unwrap();
        assert_eq!(env.step(2).unwrap().reward, 0.0);
    }

    #[test]
    fn out_of_range_action_and_terminal() {
        let task = Arc::new(build_single_path(1).unwrap());
        let mut env = WordcraftEnv::new(task);
        assert!(matches!(env.step(4), Err(Error::InvalidAction { action: 4, actions: 4 })));
        env.step(0).unwrap();
        let last = env.step(1).unwrap();
        assert!(last.terminal);
        assert_eq!(last.reward, 1.0);
        assert!(matches!(env.step(0), Err(Error::EpisodeOver)));
    }
}
