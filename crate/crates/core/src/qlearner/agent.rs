use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, LEARNING_RATE};
use super::mlp::{Activations, Mlp};
use super::replay::ReplayBuffer;
use crate::env::{BitObs, Transition};
use crate::error::{Error, Result};

/// Scalar used for training networks.
pub type Scalar = f32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Hard target-network copy every this many gradient steps.
    pub target_update_interval: u64,
    /// Environment steps per gradient step.
    pub train_every: u64,
    pub prioritized: bool,
    pub priority_alpha: f64,
    pub priority_beta: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            hidden: vec![64, 64],
            learning_rate: LEARNING_RATE,
            gamma: 0.9,
            epsilon: 0.01,
            batch_size: 32,
            replay_capacity: 5000,
            target_update_interval: 1000,
            train_every: 1,
            prioritized: false,
            priority_alpha: 0.6,
            priority_beta: 0.4,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::invalid(msg)) };
        check(self.hidden.iter().all(|&w| w > 0), "hidden widths must be positive")?;
        check(
            self.learning_rate.is_finite() && self.learning_rate > 0.0,
            "learning rate must be positive",
        )?;
        check((0.0..=1.0).contains(&self.gamma), "gamma must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.epsilon), "epsilon must lie in [0, 1]")?;
        check(self.batch_size > 0, "batch size must be positive")?;
        check(self.replay_capacity > 0, "replay capacity must be positive")?;
        check(self.target_update_interval > 0, "target update interval must be positive")?;
        check(self.train_every > 0, "train_every must be positive")?;
        check(self.priority_alpha >= 0.0, "priority alpha must be >= 0")?;
        check(self.priority_beta >= 0.0, "priority beta must be >= 0")
    }
}

/// Reusable scratch space for training steps.
#[derive(Clone, Debug, Default)]
struct Scratch {
    states: Array2<Scalar>,
    next_states: Array2<Scalar>,
    acts: Activations<Scalar>,
    target_acts: Activations<Scalar>,
    d_out: Array2<Scalar>,
    grads: Option<Mlp<Scalar>>,
}

/// Deep Q-learning agent with its own replay buffer and target network.
#[derive(Clone, Debug)]
pub struct DqnAgent {
    pub config: LearnerConfig,
    pub online: Mlp<Scalar>,
    pub target: Mlp<Scalar>,
    pub optimizer: Adam<Scalar>,
    pub buffer: ReplayBuffer,
    pub gradient_steps: u64,
    pub env_steps: u64,
    scratch: Scratch,
    obs_row: Vec<Scalar>,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(
        observation_len: usize,
        actions: usize,
        config: LearnerConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        if observation_len == 0 || actions == 0 {
            return Err(Error::invalid("observation and action sizes must be positive"));
        }
        let mut widths = vec![observation_len];
        widths.extend(&config.hidden);
        widths.push(actions);
        let online = Mlp::glorot(&widths, rng);
        let buffer = if config.prioritized {
            ReplayBuffer::prioritized(config.replay_capacity, config.priority_alpha)
        } else {
            ReplayBuffer::new(config.replay_capacity)
        };
        Ok(DqnAgent {
            optimizer: Adam::new(&online, config.learning_rate),
            target: online.clone(),
            online,
            buffer,
            gradient_steps: 0,
            env_steps: 0,
            config,
            scratch: Scratch::default(),
            obs_row: vec![0.0; observation_len],
        })
    }

    pub fn action_count(&self) -> usize {
        self.online.output_width()
    }

    pub fn q_values(&mut self, obs: &BitObs) -> Result<Vec<Scalar>> {
        if obs.len() != self.obs_row.len() {
            return Err(Error::Shape {
                expected: self.obs_row.len(),
                actual: obs.len(),
            });
        }
        obs.write_dense(&mut self.obs_row);
        self.online.forward(&self.obs_row)
    }

    /// Epsilon-greedy action; `greedy` disables exploration.
    pub fn act<R: Rng + ?Sized>(&mut self, obs: &BitObs, rng: &mut R, greedy: bool) -> Result<usize> {
        if !greedy && self.config.epsilon > 0.0 && rng.random::<f64>() < self.config.epsilon {
            return Ok(rng.random_range(0..self.action_count()));
        }
        Ok(argmax(&self.q_values(obs)?))
    }

    /// Stores a transition and runs a gradient step when one is due.
    pub fn observe<R: Rng + ?Sized>(&mut self, t: Transition, rng: &mut R) -> Result<Option<f64>> {
        self.buffer.insert(t);
        self.env_steps += 1;
        if self.env_steps % self.config.train_every == 0 && self.buffer.len() >= self.config.batch_size {
            return self.train_step(self.config.batch_size, rng).map(Some);
        }
        Ok(None)
    }

    /// `r + gamma * max_a Q_target(s', a)` for non-terminal transitions, `r` otherwise.
    pub fn td_targets(&mut self, batch: &[&Transition]) -> Result<Vec<f64>> {
        let width = self.online.input_width();
        let mut next = Array2::<Scalar>::zeros((batch.len(), width));
        for (mut row, t) in next.rows_mut().into_iter().zip(batch) {
            if t.next_state.len() != width {
                return Err(Error::Shape {
                    expected: width,
                    actual: t.next_state.len(),
                });
            }
            t.next_state
                .write_dense(row.as_slice_mut().expect("standard layout"));
        }
        self.target.forward_into(next.view(), &mut self.scratch.target_acts)?;
        let q = self.scratch.target_acts.q_values();
        Ok(batch
            .iter()
            .zip(q.rows())
            .map(|(t, row)| {
                if t.terminal {
                    t.reward
                } else {
                    let best = row.iter().copied().fold(Scalar::NEG_INFINITY, Scalar::max);
                    t.reward + self.config.gamma * f64::from(best)
                }
            })
            .collect())
    }

    /// One gradient step on a sampled batch; returns the loss.
    pub fn train_step<R: Rng + ?Sized>(&mut self, batch_size: usize, rng: &mut R) -> Result<f64> {
        if self.buffer.len() < batch_size || batch_size == 0 {
            return Err(Error::InsufficientBuffer {
                size: self.buffer.len(),
                needed: batch_size.max(1),
            });
        }
        let (slots, weights) = if self.buffer.is_prioritized() {
            let (slots, probs) = self.buffer.sample_proportional(batch_size, rng)?;
            let n = self.buffer.len() as f64;
            let beta = self.config.priority_beta;
            let raw: Vec<f64> = probs.iter().map(|p| (n * p).powf(-beta)).collect();
            let max = raw.iter().copied().fold(0.0, f64::max);
            let w = raw.iter().map(|w| (w / max) as Scalar).collect::<Vec<_>>();
            (slots, Some(w))
        } else {
            (self.buffer.sample_uniform(batch_size, rng)?, None)
        };

        let width = self.online.input_width();
        let s = &mut self.scratch;
        if s.states.dim() != (batch_size, width) {
            s.states = Array2::zeros((batch_size, width));
            s.next_states = Array2::zeros((batch_size, width));
        }
        let mut actions = Vec::with_capacity(batch_size);
        for (i, &slot) in slots.iter().enumerate() {
            let t = self.buffer.get(slot);
            if t.state.len() != width || t.next_state.len() != width {
                return Err(Error::Shape {
                    expected: width,
                    actual: t.state.len(),
                });
            }
            t.state
                .write_dense(s.states.row_mut(i).into_slice().expect("standard layout"));
            t.next_state
                .write_dense(s.next_states.row_mut(i).into_slice().expect("standard layout"));
            actions.push(t.action as usize);
        }

        self.target.forward_into(s.next_states.view(), &mut s.target_acts)?;
        let gamma = self.config.gamma as Scalar;
        let targets: Vec<Scalar> = slots
            .iter()
            .zip(s.target_acts.q_values().rows())
            .map(|(&slot, row)| {
                let t = self.buffer.get(slot);
                let r = t.reward as Scalar;
                if t.terminal {
                    r
                } else {
                    r + gamma * row.iter().copied().fold(Scalar::NEG_INFINITY, Scalar::max)
                }
            })
            .collect();

        let grads = s
            .grads
            .get_or_insert_with(|| Mlp::zeros(&self.online.widths()));
        let (loss, td) = self.online.td_loss_grad(
            s.states.view(),
            &actions,
            &targets,
            weights.as_deref(),
            &mut s.acts,
            &mut s.d_out,
            grads,
        )?;
        self.optimizer.update(&mut self.online, grads);
        if self.buffer.is_prioritized() {
            let td: Vec<f64> = td.iter().map(|&e| f64::from(e)).collect();
            self.buffer.update_priorities(&slots, &td);
        }
        self.gradient_steps += 1;
        if self.gradient_steps % self.config.target_update_interval == 0 {
            self.target.clone_from(&self.online);
        }
        Ok(f64::from(loss))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<F: PartialOrd + Copy>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obs(bits: &[usize], len: usize) -> BitObs {
        let mut o = BitObs::zeros(len);
        for &b in bits {
            o.set(b, true);
        }
        o
    }

    fn agent(cfg: LearnerConfig) -> DqnAgent {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        DqnAgent::new(4, 3, cfg, &mut rng).unwrap()
    }

    #[test]
    fn argmax_prefers_lowest_on_ties() {
        assert_eq!(argmax(&[0.0, 3.0, 1.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
    }

    #[test]
    fn zero_epsilon_is_greedy() {
        let mut a = agent(LearnerConfig {
            epsilon: 0.0,
            ..LearnerConfig::default()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for bits in [&[0][..], &[1, 2], &[3], &[]] {
            let o = obs(bits, 4);
            let g = a.act(&o, &mut rng, true).unwrap();
            for _ in 0..20 {
                assert_eq!(a.act(&o, &mut rng, false).unwrap(), g);
            }
        }
    }

    #[test]
    fn td_target_cases() {
        let mut a = agent(LearnerConfig::default());
        let terminal = Transition {
            state: obs(&[0], 4),
            action: 0,
            next_state: obs(&[1], 4),
            reward: 1.0,
            terminal: true,
        };
        assert_eq!(a.td_targets(&[&terminal]).unwrap(), vec![1.0]);

        // make max_a Q_target(s') = 2 by zeroing weights and setting biases
        for l in &mut a.target.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        a.target.layers.last_mut().unwrap().bias[2] = 2.0;
        let t = Transition {
            reward: 0.0,
            terminal: false,
            ..terminal.clone()
        };
        let y = a.td_targets(&[&t]).unwrap()[0];
        assert!((y - 1.8).abs() < 1e-12);

        a.config.gamma = 0.0;
        let t = Transition { reward: 0.25, ..t };
        assert_eq!(a.td_targets(&[&t]).unwrap(), vec![0.25]);
    }

    #[test]
    fn insufficient_buffer_is_error() {
        let mut a = agent(LearnerConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            a.train_step(32, &mut rng),
            Err(Error::InsufficientBuffer { size: 0, needed: 32 })
        ));
    }

    #[test]
    fn target_copies_on_interval_only() {
        let mut a = agent(LearnerConfig {
            batch_size: 4,
            target_update_interval: 3,
            ..LearnerConfig::default()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..8u32 {
            a.buffer.insert(Transition {
                state: obs(&[(i % 4) as usize], 4),
                action: i % 3,
                next_state: obs(&[((i + 1) % 4) as usize], 4),
                reward: f64::from(i % 2),
                terminal: i % 4 == 3,
            });
        }
        let initial = a.target.clone();
        a.train_step(4, &mut rng).unwrap();
        a.train_step(4, &mut rng).unwrap();
        assert_eq!(a.target, initial);
        assert_ne!(a.online, initial);
        a.train_step(4, &mut rng).unwrap();
        assert_eq!(a.target, a.online);
    }
}
