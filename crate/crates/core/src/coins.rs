//! Deceptive-coins corridor.
//!
//! ```text
//!  0  1  2  3  4  5  6  7  8  9 10 11 12
//!  F  .  .  .  D  .  S  .  .  D  D  D  F
//! ```
//!
//! The agent starts on `S`. Entering the first diamond of an arm commits to
//! that arm and raises a barrier behind it. The left arm pays one diamond plus
//! a fire bonus of 1 (total 2); the right arm pays three diamonds plus a fire
//! bonus of 2 (total 5). Fire ends the episode, as does the step limit.

use crate::env::{BitObs, Environment, Step};
use crate::error::{Error, Result};

pub const CORRIDOR_LEN: usize = 13;
pub const START: usize = 6;
pub const TIMEOUT: u32 = 14;
pub const LEFT_FIRE: usize = 0;
pub const RIGHT_FIRE: usize = 12;
pub const LEFT_FIRE_BONUS: f64 = 1.0;
pub const RIGHT_FIRE_BONUS: f64 = 2.0;
/// Diamond cells; the first left and first right entries are the commit points.
pub const DIAMONDS: [usize; 4] = [4, 9, 10, 11];
const LEFT_COMMIT: usize = 4;
const RIGHT_COMMIT: usize = 9;

pub const ACTION_LEFT: usize = 0;
pub const ACTION_RIGHT: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Commitment {
    None,
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoinsState {
    pub position: usize,
    pub collected: [bool; DIAMONDS.len()],
    pub committed: Commitment,
    pub steps: u32,
}

impl CoinsState {
    fn start() -> Self {
        CoinsState {
            position: START,
            collected: [false; DIAMONDS.len()],
            committed: Commitment::None,
            steps: 0,
        }
    }

    /// One-hot position ⊕ collected bits ⊕ one-hot commitment.
    pub fn encode(&self) -> BitObs {
        let mut obs = BitObs::zeros(OBS_LEN);
        obs.set(self.position, true);
        for (i, &c) in self.collected.iter().enumerate() {
            obs.set(CORRIDOR_LEN + i, c);
        }
        let commit = match self.committed {
            Commitment::None => 0,
            Commitment::Left => 1,
            Commitment::Right => 2,
        };
        obs.set(CORRIDOR_LEN + DIAMONDS.len() + commit, true);
        obs
    }
}

const OBS_LEN: usize = CORRIDOR_LEN + DIAMONDS.len() + 3;

#[derive(Clone, Debug)]
pub struct CoinsEnv {
    state: CoinsState,
    terminal: bool,
    trajectory: Vec<u32>,
    episode_return: f64,
}

impl Default for CoinsEnv {
    fn default() -> Self {
        CoinsEnv::new()
    }
}

impl CoinsEnv {
    pub fn new() -> Self {
        CoinsEnv {
            state: CoinsState::start(),
            terminal: false,
            trajectory: Vec::new(),
            episode_return: 0.0,
        }
    }

    pub fn state(&self) -> &CoinsState {
        &self.state
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn episode_return(&self) -> f64 {
        self.episode_return
    }

    /// Resets and returns the typed state.
    pub fn coins_reset(&mut self) -> CoinsState {
        self.reset();
        self.state.clone()
    }

    pub fn coins_step(&mut self, action: usize) -> Result<(CoinsState, f64, bool)> {
        let s = self.step(action)?;
        Ok((self.state.clone(), s.reward, s.terminal))
    }

    fn blocked(&self, target: usize) -> bool {
        match self.state.committed {
            Commitment::Left => target > LEFT_COMMIT,
            Commitment::Right => target < RIGHT_COMMIT,
            Commitment::None => false,
        }
    }

    /// ASCII rendering of the corridor with the agent as `@`.
    pub fn render(&self) -> String {
        (0..CORRIDOR_LEN)
            .map(|c| {
                if c == self.state.position {
                    '@'
                } else if c == LEFT_FIRE || c == RIGHT_FIRE {
                    'F'
                } else if let Some(i) = DIAMONDS.iter().position(|&d| d == c) {
                    if self.state.collected[i] {
                        '_'
                    } else {
                        'D'
                    }
                } else {
                    '.'
                }
            })
            .collect()
    }
}

impl Environment for CoinsEnv {
    fn observation_len(&self) -> usize {
        OBS_LEN
    }

    fn action_count(&self) -> usize {
        2
    }

    fn reset(&mut self) -> BitObs {
        self.state = CoinsState::start();
        self.terminal = false;
        self.trajectory.clear();
        self.episode_return = 0.0;
        self.state.encode()
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if action > 1 {
            return Err(Error::InvalidAction { action, actions: 2 });
        }
        if self.terminal {
            return Err(Error::EpisodeOver);
        }
        let pos = self.state.position;
        let target = match action {
            ACTION_LEFT => pos.saturating_sub(1),
            _ => (pos + 1).min(CORRIDOR_LEN - 1),
        };
        let mut reward = 0.0;
        if !self.blocked(target) {
            self.state.position = target;
            if target == LEFT_COMMIT && self.state.committed == Commitment::None {
                self.state.committed = Commitment::Left;
            }
            if target == RIGHT_COMMIT && self.state.committed == Commitment::None {
                self.state.committed = Commitment::Right;
            }
            if let Some(i) = DIAMONDS.iter().position(|&d| d == target) {
                if !self.state.collected[i] {
                    self.state.collected[i] = true;
                    self.trajectory.push(target as u32);
                    reward += 1.0;
                }
            }
            if target == LEFT_FIRE || target == RIGHT_FIRE {
                reward += if target == LEFT_FIRE {
                    LEFT_FIRE_BONUS
                } else {
                    RIGHT_FIRE_BONUS
                };
                self.trajectory.push(target as u32);
                self.terminal = true;
            }
        }
        self.state.steps += 1;
        if self.state.steps >= TIMEOUT {
            self.terminal = true;
        }
        self.episode_return += reward;
        Ok(Step {
            observation: self.state.encode(),
            reward,
            terminal: self.terminal,
        })
    }

    fn trajectory(&self) -> &[u32] {
        &self.trajectory
    }

    fn optimal_return(&self) -> f64 {
        DIAMONDS.len() as f64 - 1.0 + RIGHT_FIRE_BONUS
    }
}
