use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{trial_seed, ExperimentConfig, TaskInstance};
use super::events::{eval_points, parse_events};
use super::store::{self, trial_dir, DirRecorder, TrialMeta};
use super::trial::{run_trial, Discard, TrialOutcome};
use crate::error::{Error, Result};
use crate::metrics::{decode_snapshots, read_metrics_csv, trial_metrics, write_metrics_csv, MetricRow};
use crate::stats::{mean_ci, one_way_anova, std_dev, tukey_hsd, Anova, SampleSet, TukeyPair};

/// Per-trial scalar summaries derived from the metric table.
pub fn trial_scalars(rows: &[MetricRow]) -> BTreeMap<String, f64> {
    let mut series: BTreeMap<&str, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for r in rows {
        match r.metric.as_str() {
            "group_success" | "time_first_success" | "time_all_success" | "spread_time" => {
                out.insert(r.metric.clone(), r.value);
            }
            // per-agent returns are summarised by reward_max / reward_mean
            "return" => {}
            m => series.entry(m).or_default().entry(r.step).or_default().push(r.value),
        }
    }
    for (metric, by_step) in &series {
        // agent-level metrics are averaged over agents first
        let per_step: Vec<f64> = by_step.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        let name = match *metric {
            "volatility" => "volatility_mean",
            "diversity" => "diversity_mean",
            m => m,
        };
        out.insert(format!("{name}_final"), *per_step.last().unwrap());
        out.insert(format!("{name}_avg"), per_step.iter().sum::<f64>() / per_step.len() as f64);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub metric: String,
    pub mean: f64,
    pub ci_half: f64,
    pub std: f64,
    pub n: usize,
}

fn stat_row(metric: &str, values: &[f64]) -> StatRow {
    let (mean, ci_half) = if values.len() >= 2 {
        mean_ci(values, 0.95).unwrap()
    } else {
        (values.iter().sum::<f64>() / values.len().max(1) as f64, 0.0)
    };
    StatRow {
        metric: metric.to_string(),
        mean,
        ci_half,
        std: std_dev(values),
        n: values.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub metric: String,
    pub step: u64,
    pub mean: f64,
    pub ci_half: f64,
    pub n: usize,
}

/// Across-trial mean and 95% CI of each metric per evaluation step.
pub fn series(trials: &[&[MetricRow]]) -> Vec<SeriesRow> {
    let mut acc: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    for rows in trials {
        let mut per_trial: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
        for r in rows.iter() {
            let name = match r.metric.as_str() {
                "group_success" | "time_first_success" | "time_all_success" | "spread_time" | "return" => continue,
                m if r.agent_or_group == "group" => m.to_string(),
                m => format!("{m}_mean"),
            };
            per_trial.entry((name, r.step)).or_default().push(r.value);
        }
        for (key, v) in per_trial {
            acc.entry(key).or_default().push(v.iter().sum::<f64>() / v.len() as f64);
        }
    }
    acc.into_iter()
        .map(|((metric, step), v)| {
            let s = stat_row(&metric, &v);
            SeriesRow {
                metric,
                step,
                mean: s.mean,
                ci_half: s.ci_half,
                n: s.n,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub seed: u64,
    pub complete: bool,
    pub error: Option<String>,
    pub scalars: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub config_hash: String,
    pub task: String,
    pub incomplete: bool,
    pub trials: Vec<TrialSummary>,
    pub stats: Vec<StatRow>,
}

impl ExperimentSummary {
    pub fn stat(&self, metric: &str) -> Option<&StatRow> {
        self.stats.iter().find(|s| s.metric == metric)
    }

    /// Values of a scalar over the completed trials.
    pub fn values(&self, metric: &str) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.complete)
            .filter_map(|t| t.scalars.get(metric).copied())
            .collect()
    }

    pub fn failed(&self) -> usize {
        self.trials.iter().filter(|t| !t.complete).count()
    }
}

fn summarize(cfg: &ExperimentConfig, task: &str, trials: Vec<TrialSummary>) -> ExperimentSummary {
    let mut metrics: Vec<&String> = trials.iter().flat_map(|t| t.scalars.keys()).collect();
    metrics.sort();
    metrics.dedup();
    let done: Vec<&TrialSummary> = trials.iter().filter(|t| t.complete).collect();
    let stats = metrics
        .into_iter()
        .map(|m| {
            let v: Vec<f64> = done.iter().filter_map(|t| t.scalars.get(m).copied()).collect();
            stat_row(m, &v)
        })
        .collect();
    ExperimentSummary {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        task: task.to_string(),
        incomplete: trials.iter().any(|t| !t.complete),
        trials,
        stats,
    }
}

fn write_summary(dir: &Path, summary: &ExperimentSummary, series_rows: &[SeriesRow]) -> Result<()> {
    store::write_file(&dir.join("summary.json"), serde_json::to_string_pretty(summary)?.as_bytes())?;
    let mut w = csv::Writer::from_writer(store::create(&dir.join("summary.csv"))?);
    for s in &summary.stats {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("summary.csv"), e))?;
    let mut w = csv::Writer::from_writer(store::create(&dir.join("series.csv"))?);
    for s in series_rows {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(dir.join("series.csv"), e))
}

fn run_recorded(cfg: &ExperimentConfig, task: &TaskInstance, trial: u64, root: &Path) -> Result<TrialOutcome> {
    let dir = trial_dir(root, trial);
    let mut rec = DirRecorder::create(&dir)?;
    let result = run_trial(cfg, task, trial, &mut rec);
    let flushed = rec.flush();
    let outcome = result.and_then(|o| flushed.map(|_| o));
    let meta = match &outcome {
        Ok(o) => {
            let mut bytes = Vec::new();
            write_metrics_csv(&o.rows, &mut bytes)?;
            store::write_file(&dir.join("metrics.csv"), &bytes)?;
            TrialMeta {
                trial,
                seed: o.seed,
                config_hash: cfg.hash(),
                complete: true,
                error: None,
                episodes: o.episodes,
                shared_transitions: o.shared_transitions,
                wall_secs: o.wall_secs,
            }
        }
        Err(e) => TrialMeta {
            trial,
            seed: trial_seed(cfg.seed, trial),
            config_hash: cfg.hash(),
            complete: false,
            error: Some(e.to_string()),
            episodes: 0,
            shared_transitions: 0,
            wall_secs: 0.0,
        },
    };
    store::write_file(&dir.join("meta.json"), serde_json::to_string_pretty(&meta)?.as_bytes())?;
    outcome
}

/// Runs every trial of `cfg` on a pool of `cfg.workers` threads. With an
/// output directory, all records are persisted there. Trial failures are
/// reported in the summary rather than aborting the others.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let task = cfg.task.build()?;
    if let Some(dir) = out {
        store::create_dir(dir)?;
        store::write_file(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let outcomes: Vec<(u64, Result<TrialOutcome>)> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let r = match out {
                    Some(dir) => run_recorded(cfg, &task, t, dir),
                    None => run_trial(cfg, &task, t, &mut Discard),
                };
                (t, r)
            })
            .collect()
    });
    let mut trials = Vec::new();
    let mut rows: Vec<&[MetricRow]> = Vec::new();
    for (t, r) in &outcomes {
        trials.push(match r {
            Ok(o) => {
                rows.push(&o.rows);
                TrialSummary {
                    trial: *t,
                    seed: o.seed,
                    complete: true,
                    error: None,
                    scalars: trial_scalars(&o.rows),
                }
            }
            Err(e) => TrialSummary {
                trial: *t,
                seed: trial_seed(cfg.seed, *t),
                complete: false,
                error: Some(e.to_string()),
                scalars: BTreeMap::new(),
            },
        });
    }
    let summary = summarize(cfg, task.name(), trials);
    if let Some(dir) = out {
        write_summary(dir, &summary, &series(&rows))?;
    }
    Ok(summary)
}

fn trial_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("trial-")))
        .collect();
    dirs.sort();
    Ok(dirs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub trials: usize,
    /// Trials whose stored metric table differs from the one recomputed
    /// from events and snapshots.
    pub mismatched: Vec<u64>,
    pub summary: ExperimentSummary,
}

/// Recomputes every trial's metrics from its event stream and snapshots,
/// checks them against the stored tables, and rewrites the summary files.
pub fn analyze(root: &Path) -> Result<AnalyzeReport> {
    let cfg = ExperimentConfig::load(&root.join("config.toml"))?;
    let mut trials = Vec::new();
    let mut mismatched = Vec::new();
    let mut all_rows = Vec::new();
    for dir in trial_dirs(root)? {
        let meta: TrialMeta = serde_json::from_str(&store::read_string(&dir.join("meta.json"))?)?;
        if !meta.complete {
            trials.push(TrialSummary {
                trial: meta.trial,
                seed: meta.seed,
                complete: false,
                error: meta.error,
                scalars: BTreeMap::new(),
            });
            continue;
        }
        let events = parse_events(&store::read_string(&dir.join("events.jsonl"))?)?;
        let snaps = decode_snapshots(&store::read_file(&dir.join("snapshots.bin"))?)?;
        let recomputed = trial_metrics(meta.trial, &eval_points(&events), &snaps, cfg.steps)?;
        let stored = read_metrics_csv(store::read_file(&dir.join("metrics.csv"))?.as_slice())?;
        if stored != recomputed {
            mismatched.push(meta.trial);
        }
        trials.push(TrialSummary {
            trial: meta.trial,
            seed: meta.seed,
            complete: true,
            error: None,
            scalars: trial_scalars(&recomputed),
        });
        all_rows.push(recomputed);
    }
    let task = cfg.task.build().map(|t| t.name().to_string()).unwrap_or_default();
    let summary = summarize(&cfg, &task, trials);
    let refs: Vec<&[MetricRow]> = all_rows.iter().map(Vec::as_slice).collect();
    write_summary(root, &summary, &series(&refs))?;
    Ok(AnalyzeReport {
        trials: summary.trials.len(),
        mismatched,
        summary,
    })
}

pub fn load_summary(dir: &Path) -> Result<ExperimentSummary> {
    Ok(serde_json::from_str(&store::read_string(&dir.join("summary.json"))?)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub groups: Vec<(String, Vec<f64>)>,
    pub anova: Option<Anova>,
    pub tukey: Vec<TukeyPair>,
}

/// ANOVA and Tukey HSD of one trial-level scalar across conditions.
/// Tests are skipped (left empty) when a condition has fewer than two values.
pub fn compare(summaries: &[ExperimentSummary], metric: &str, alpha: f64) -> Result<Comparison> {
    let mut set = SampleSet::new();
    for s in summaries {
        let mut name = s.name.clone();
        let mut i = 2;
        while set.groups.iter().any(|(n, _)| *n == name) {
            name = format!("{}#{i}", s.name);
            i += 1;
        }
        set.push(name, s.values(metric));
    }
    let testable = set.groups.len() >= 2 && set.groups.iter().all(|(_, v)| v.len() >= 2);
    let (anova, tukey) = if testable {
        (Some(one_way_anova(&set)?), tukey_hsd(&set, alpha)?)
    } else {
        (None, Vec::new())
    };
    Ok(Comparison {
        metric: metric.to_string(),
        groups: set.groups,
        anova,
        tukey,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub batch_len: usize,
    pub probability: f64,
    pub group_success: f64,
    pub ci_half: f64,
}

pub const SWEEP_BATCH_LENS: [usize; 3] = [1, 6, 36];
pub const SWEEP_PROBABILITIES: [f64; 3] = [0.35, 0.7, 1.0];

/// Runs the base config once per `(batch_len, probability)` cell.
pub fn sweep(base: &ExperimentConfig, batch_lens: &[usize], probs: &[f64], out: Option<&Path>) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &l in batch_lens {
        for &p in probs {
            let mut cfg = base.clone();
            cfg.sharing.batch_len = l;
            cfg.sharing.probability = p;
            cfg.name = format!("{}-ls{l}-ps{p}", base.name);
            let dir = out.map(|d| d.join(format!("ls{l}-ps{p}")));
            let s = run_experiment(&cfg, dir.as_deref())?;
            let stat = s.stat("group_success").cloned().unwrap_or_else(|| stat_row("group_success", &[]));
            cells.push(SweepCell {
                batch_len: l,
                probability: p,
                group_success: stat.mean,
                ci_half: stat.ci_half,
            });
        }
    }
    if let Some(dir) = out {
        let mut w = csv::Writer::from_writer(store::create(&dir.join("sweep.csv"))?);
        for c in &cells {
            w.serialize(c)?;
        }
        w.flush().map_err(|e| Error::io(dir.join("sweep.csv"), e))?;
    }
    Ok(cells)
}
