use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coins::CoinsEnv;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::qlearner::LearnerConfig;
use crate::recipe::{parse_task, BestOfN, MergingPaths, SinglePath, TaskSpec};
use crate::sharing::SharingConfig;
use crate::topology::{BoydScheduler, PeriodicScheduler, Scheduler, SocialGraph};
use crate::wordcraft::WordcraftEnv;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskConfig {
    SinglePath {
        length: u32,
        horizon: Option<u32>,
    },
    MergingPaths {
        branch_len: u32,
        crossroad_rank: u32,
        merged_len: u32,
        horizon: Option<u32>,
    },
    BestOfN {
        n_paths: u32,
        optimal_len: u32,
        suboptimal_len: u32,
        optimal_index: u32,
        optimal_scale: f64,
        horizon: Option<u32>,
    },
    Coins,
    /// Task in the line-based text format.
    File { path: PathBuf },
}

impl Default for TaskConfig {
    fn default() -> Self {
        let m = MergingPaths::default();
        TaskConfig::MergingPaths {
            branch_len: m.branch_len,
            crossroad_rank: m.crossroad_rank,
            merged_len: m.merged_len,
            horizon: None,
        }
    }
}

/// A built task from which per-agent environments are spawned.
#[derive(Clone, Debug)]
pub enum TaskInstance {
    Wordcraft(Arc<TaskSpec>),
    Coins,
}

impl TaskInstance {
    pub fn make_env(&self) -> Box<dyn Environment + Send> {
        match self {
            TaskInstance::Wordcraft(t) => Box::new(WordcraftEnv::new(t.clone())),
            TaskInstance::Coins => Box::new(CoinsEnv::new()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            TaskInstance::Wordcraft(t) => &t.name,
            TaskInstance::Coins => "deceptive-coins",
        }
    }
}

impl TaskConfig {
    pub fn build(&self) -> Result<TaskInstance> {
        let (spec, horizon) = match self {
            TaskConfig::SinglePath { length, horizon } => (SinglePath { length: *length }.build()?, *horizon),
            TaskConfig::MergingPaths {
                branch_len,
                crossroad_rank,
                merged_len,
                horizon,
            } => (
                MergingPaths {
                    branch_len: *branch_len,
                    crossroad_rank: *crossroad_rank,
                    merged_len: *merged_len,
                }
                .build()?,
                *horizon,
            ),
            TaskConfig::BestOfN {
                n_paths,
                optimal_len,
                suboptimal_len,
                optimal_index,
                optimal_scale,
                horizon,
            } => (
                BestOfN {
                    n_paths: *n_paths,
                    optimal_len: *optimal_len,
                    suboptimal_len: *suboptimal_len,
                    optimal_index: *optimal_index,
                    optimal_scale: *optimal_scale,
                }
                .build()?,
                *horizon,
            ),
            TaskConfig::Coins => return Ok(TaskInstance::Coins),
            TaskConfig::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                (parse_task(&text)?, None)
            }
        };
        let spec = match horizon {
            Some(h) => spec.with_horizon(h)?,
            None => spec,
        };
        Ok(TaskInstance::Wordcraft(Arc::new(spec)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TopologyConfig {
    #[default]
    FullyConnected,
    SmallWorld {
        neighbors: usize,
        rewire_prob: f64,
    },
    Ring,
    /// Agent pairs with occasional visits to another pair.
    Dynamic {
        visit_prob: f64,
        visit_len: u32,
    },
    /// Fully connected for `high_len` episodes, then isolated for `low_len`.
    DynamicPeriodic {
        high_len: u32,
        low_len: u32,
    },
    NoSharing,
}

impl TopologyConfig {
    pub fn build_scheduler(&self, k: usize, rng: &mut ChaCha8Rng) -> Result<Scheduler> {
        Ok(match self {
            TopologyConfig::FullyConnected => Scheduler::Static(SocialGraph::fully_connected(k)),
            TopologyConfig::SmallWorld {
                neighbors,
                rewire_prob,
            } => Scheduler::Static(SocialGraph::watts_strogatz(k, *neighbors, *rewire_prob, rng)?),
            TopologyConfig::Ring => Scheduler::Static(SocialGraph::ring(k)?),
            TopologyConfig::Dynamic {
                visit_prob,
                visit_len,
            } => Scheduler::Boyd(BoydScheduler::new(k, *visit_prob, *visit_len)?),
            TopologyConfig::DynamicPeriodic { high_len, low_len } => {
                Scheduler::Periodic(PeriodicScheduler::new(k, *high_len, *low_len)?)
            }
            TopologyConfig::NoSharing => Scheduler::Static(SocialGraph::empty(k)),
        })
    }
}

pub const PRESETS: [&str; 7] = [
    "fully-connected",
    "small-world",
    "ring",
    "dynamic",
    "dynamic-periodic",
    "no-sharing",
    "single",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Group size K.
    pub agents: usize,
    /// Environment steps per agent.
    pub steps: u64,
    pub eval_interval: u64,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads for trials; 0 picks the machine default. Never affects results.
    pub workers: usize,
    pub output: PathBuf,
    pub task: TaskConfig,
    pub topology: TopologyConfig,
    pub sharing: SharingConfig,
    pub learner: LearnerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "fully-connected".into(),
            agents: 10,
            steps: 100_000,
            eval_interval: 2000,
            trials: 10,
            seed: 0,
            workers: 0,
            output: PathBuf::from("runs"),
            task: TaskConfig::default(),
            topology: TopologyConfig::default(),
            sharing: SharingConfig::default(),
            learner: LearnerConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let topology = match name {
            "fully-connected" => TopologyConfig::FullyConnected,
            "small-world" => TopologyConfig::SmallWorld {
                neighbors: 4,
                rewire_prob: 0.2,
            },
            "ring" => TopologyConfig::Ring,
            "dynamic" => TopologyConfig::Dynamic {
                visit_prob: 0.05,
                visit_len: 10,
            },
            "dynamic-periodic" => TopologyConfig::DynamicPeriodic {
                high_len: 10,
                low_len: 100,
            },
            "no-sharing" | "single" => TopologyConfig::NoSharing,
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset {name:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(ExperimentConfig {
            name: name.into(),
            agents: if name == "single" { 1 } else { 10 },
            topology,
            ..Default::default()
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents == 0 {
            return Err(Error::Config("agents must be >= 1".into()));
        }
        if self.steps == 0 || self.eval_interval == 0 {
            return Err(Error::Config("steps and eval_interval must be >= 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        self.sharing.validate()?;
        self.learner.validate()?;
        // catch topology parameter errors before any trial starts
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        self.topology.build_scheduler(self.agents, &mut rng)?;
        Ok(())
    }

    /// Hex SHA-256 of the settings that influence results (worker count and
    /// output location excluded).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.workers = 0;
        canon.output = PathBuf::new();
        hex::encode(Sha256::digest(canon.to_toml().as_bytes()))
    }
}

/// Stream ids inside a trial; agent `k` uses `AGENT_STREAM_BASE + k`.
pub const TOPOLOGY_STREAM: u64 = 0;
pub const SHARING_STREAM: u64 = 1;
pub const AGENT_STREAM_BASE: u64 = 2;

/// Seed of trial `t`: the first output of ChaCha8 keyed by the master seed on stream `t`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

/// Independent generator for one consumer inside a trial.
pub fn stream_rng(trial_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in PRESETS {
            let c = ExperimentConfig::preset(p).unwrap();
            c.validate().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        }
        assert_eq!(ExperimentConfig::preset("single").unwrap().agents, 1);
        assert!(ExperimentConfig::preset("a2c").is_err());
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c = ExperimentConfig::from_toml(
            "agents = 4\n[task]\nkind = \"single-path\"\nlength = 3\n[sharing]\nbatch_len = 2\n",
        )
        .unwrap();
        assert_eq!(c.agents, 4);
        assert_eq!(c.sharing.batch_len, 2);
        assert_eq!(c.sharing.probability, 1.0);
        assert_eq!(c.eval_interval, 2000);
        assert!(ExperimentConfig::from_toml("agentz = 4").is_err());
        assert!(ExperimentConfig::from_toml("agents = 3\n[topology]\nkind = \"dynamic\"\nvisit_prob = 0.1\nvisit_len = 2").is_err());
    }

    #[test]
    fn hash_ignores_plumbing() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.workers = 4;
        b.output = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn seed_streams_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(7, t)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
    }
}
