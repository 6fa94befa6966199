//! Deep Q-learning agent built from scratch: MLP value network, Adam,
//! epsilon-greedy behaviour, target network and (prioritized) replay.

mod adam;
mod agent;
pub mod checkpoint;
mod mlp;
mod replay;

pub use adam::{Adam, BETA1, BETA2, EPSILON as ADAM_EPSILON, LEARNING_RATE};
pub use agent::{argmax, DqnAgent, LearnerConfig, Scalar};
pub use mlp::{Activations, Dense, Mlp, Real};
pub use replay::{ReplayBuffer, SumTree, PRIORITY_FLOOR};
