//! Experiment configuration, seeded trial execution, persistence and reporting.

mod config;
mod events;
mod experiment;
pub mod plot;
mod store;
mod trial;

pub use config::{
    stream_rng, trial_seed, ExperimentConfig, TaskConfig, TaskInstance, TopologyConfig, AGENT_STREAM_BASE,
    PRESETS, SHARING_STREAM, TOPOLOGY_STREAM,
};
pub use events::{eval_points, parse_events, write_event, Event, ShareLogRow};
pub use experiment::{
    analyze, compare, load_summary, run_experiment, series, sweep, trial_scalars, AnalyzeReport, Comparison,
    ExperimentSummary, SeriesRow, StatRow, SweepCell, TrialSummary, SWEEP_BATCH_LENS, SWEEP_PROBABILITIES,
};
pub use store::{trial_dir, TrialMeta};
pub use trial::{eval_schedule, evaluate_agent, run_trial, Discard, Recorder, TrialOutcome};
