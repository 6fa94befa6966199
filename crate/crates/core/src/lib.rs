//! Groups of independent deep Q-learning agents that exchange replay-buffer
//! experience over a social network, plus the innovation tasks, metrics and
//! statistics used to compare network structures.

pub mod env;
pub mod error;
pub mod metrics;
pub mod qlearner;
pub mod coins;
pub mod recipe;
pub mod runner;
pub mod sharing;
pub mod stats;
pub mod topology;
pub mod wordcraft;

pub use error::{Error, Result};
