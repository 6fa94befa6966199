use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{
    stream_rng, trial_seed, ExperimentConfig, TaskInstance, AGENT_STREAM_BASE, SHARING_STREAM,
    TOPOLOGY_STREAM,
};
use crate::env::{Environment, Transition};
use crate::error::Result;
use crate::metrics::{AgentEval, BufferSnapshot, EvalPoint, MetricRow, MetricTracker};
use crate::qlearner::DqnAgent;
use crate::sharing::{share_phase, ShareRecord};
use crate::topology::SocialGraph;

/// Receives everything a trial produces, in order.
pub trait Recorder {
    fn graph(&mut self, _episode: u64, _step: u64, _graph: &SocialGraph) -> Result<()> {
        Ok(())
    }
    fn shares(&mut self, _episode: u64, _step: u64, _log: &[ShareRecord]) -> Result<()> {
        Ok(())
    }
    fn eval(&mut self, _point: &EvalPoint) -> Result<()> {
        Ok(())
    }
    fn snapshot(&mut self, _snap: &BufferSnapshot) -> Result<()> {
        Ok(())
    }
}

/// Keeps nothing.
pub struct Discard;

impl Recorder for Discard {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub rows: Vec<MetricRow>,
    pub evals: Vec<EvalPoint>,
    pub episodes: u64,
    pub shared_transitions: u64,
    pub wall_secs: f64,
}

/// Multiples of `interval` up to `steps`, plus `steps` itself.
pub fn eval_schedule(steps: u64, interval: u64) -> Vec<u64> {
    let mut s: Vec<u64> = (1..=steps / interval).map(|i| i * interval).collect();
    if s.last() != Some(&steps) {
        s.push(steps);
    }
    s
}

fn train_episode(
    agent: &mut DqnAgent,
    env: &mut dyn Environment,
    rng: &mut ChaCha8Rng,
    steps: &mut u64,
    budget: u64,
) -> Result<()> {
    let mut obs = env.reset();
    while *steps < budget {
        let action = agent.act(&obs, rng, false)?;
        let st = env.step(action)?;
        agent.observe(
            Transition {
                state: obs,
                action: action as u32,
                next_state: st.observation.clone(),
                reward: st.reward,
                terminal: st.terminal,
            },
            rng,
        )?;
        *steps += 1;
        if st.terminal {
            break;
        }
        obs = st.observation;
    }
    Ok(())
}

/// One greedy episode in a fresh environment.
pub fn evaluate_agent<R: Rng + ?Sized>(agent: &mut DqnAgent, task: &TaskInstance, rng: &mut R) -> Result<AgentEval> {
    let mut env = task.make_env();
    let mut obs = env.reset();
    let mut ret = 0.0;
    loop {
        let st = env.step(agent.act(&obs, rng, true)?)?;
        ret += st.reward;
        if st.terminal {
            break;
        }
        obs = st.observation;
    }
    Ok(AgentEval {
        trajectory: env.trajectory().to_vec(),
        normalized_return: ret / env.optimal_return(),
    })
}

/// Trains a group for `cfg.steps` environment steps per agent.
///
/// Each round every unfinished agent plays one episode (truncated at the
/// budget); then the scheduler advances, experience is shared over the new
/// graph, and any evaluation points the slowest agent has passed are taken.
pub fn run_trial(
    cfg: &ExperimentConfig,
    task: &TaskInstance,
    trial: u64,
    rec: &mut dyn Recorder,
) -> Result<TrialOutcome> {
    let start = Instant::now();
    let seed = trial_seed(cfg.seed, trial);
    let k = cfg.agents;
    let mut topo_rng = stream_rng(seed, TOPOLOGY_STREAM);
    let mut share_rng = stream_rng(seed, SHARING_STREAM);
    let mut rngs: Vec<ChaCha8Rng> = (0..k as u64).map(|i| stream_rng(seed, AGENT_STREAM_BASE + i)).collect();
    let mut scheduler = cfg.topology.build_scheduler(k, &mut topo_rng)?;
    let mut envs: Vec<_> = (0..k).map(|_| task.make_env()).collect();
    let (obs_len, actions) = (envs[0].observation_len(), envs[0].action_count());
    let mut agents = rngs
        .iter_mut()
        .map(|r| DqnAgent::new(obs_len, actions, cfg.learner.clone(), r))
        .collect::<Result<Vec<_>>>()?;

    let schedule = eval_schedule(cfg.steps, cfg.eval_interval);
    let mut next_eval = 0;
    let mut steps = vec![0u64; k];
    let mut tracker = MetricTracker::new(trial);
    let mut last_graph: Option<SocialGraph> = None;
    let (mut episode, mut shared) = (0u64, 0u64);
    while next_eval < schedule.len() {
        for i in 0..k {
            if steps[i] < cfg.steps {
                train_episode(&mut agents[i], envs[i].as_mut(), &mut rngs[i], &mut steps[i], cfg.steps)?;
            }
        }
        let step = *steps.iter().min().unwrap();
        let graph = scheduler.step(&mut topo_rng);
        if last_graph.as_ref() != Some(&graph) {
            rec.graph(episode, step, &graph)?;
            last_graph = Some(graph.clone());
        }
        let log = share_phase(&mut agents, &graph, &cfg.sharing, &mut share_rng)?;
        if !log.is_empty() {
            shared += log.iter().map(|r| r.count as u64).sum::<u64>();
            rec.shares(episode, step, &log)?;
        }
        while next_eval < schedule.len() && step >= schedule[next_eval] {
            let at = schedule[next_eval];
            let agents_eval = agents
                .iter_mut()
                .zip(rngs.iter_mut())
                .map(|(a, r)| evaluate_agent(a, task, r))
                .collect::<Result<Vec<_>>>()?;
            let point = EvalPoint { step: at, agents: agents_eval };
            tracker.record_eval(&point)?;
            rec.eval(&point)?;
            let snap = BufferSnapshot::capture(at, &agents);
            tracker.record_snapshot(&snap);
            rec.snapshot(&snap)?;
            next_eval += 1;
        }
        episode += 1;
    }
    let evals = tracker.evals().to_vec();
    Ok(TrialOutcome {
        trial,
        seed,
        rows: tracker.finish(cfg.steps)?,
        evals,
        episodes: episode,
        shared_transitions: shared,
        wall_secs: start.elapsed().as_secs_f64(),
    })
}
