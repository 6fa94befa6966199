use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use groupcraft::qlearner::LearnerConfig;
use groupcraft::recipe::{BestOfN, SinglePath};
use groupcraft::runner::{
    analyze, compare, load_summary, plot, run_experiment, sweep, ExperimentConfig, ExperimentSummary, TaskConfig,
    TopologyConfig, SWEEP_BATCH_LENS, SWEEP_PROBABILITIES,
};
use groupcraft::sharing::ShareMode;

#[derive(Parser)]
#[command(name = "groupcraft", version, about = "Groups of DQN agents sharing replay experience over social networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of one configuration.
    Run(ConfigArgs),
    /// Run a grid over shared batch length and share probability.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = SWEEP_BATCH_LENS)]
        batch_lens: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = SWEEP_PROBABILITIES)]
        probs: Vec<f64>,
    },
    /// Recompute metrics of a finished run from its event streams and refresh its summary.
    Analyze { dir: PathBuf },
    /// Render line charts from one or more finished runs.
    Plot {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// ANOVA and Tukey HSD of a trial-level metric across finished runs.
    Compare {
        #[arg(required = true, num_args = 2..)]
        dirs: Vec<PathBuf>,
        #[arg(long, default_value = "group_success")]
        metric: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "comparison")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskKind {
    SinglePath,
    MergingPaths,
    BestOfN,
    Coins,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyKind {
    FullyConnected,
    SmallWorld,
    Ring,
    Dynamic,
    DynamicPeriodic,
    NoSharing,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uniform,
    Prioritized,
}

/// Config file or preset, then per-field overrides.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Built-in condition: fully-connected, small-world, ring, dynamic, dynamic-periodic, no-sharing, single.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    name: Option<String>,
    /// Group size K.
    #[arg(long)]
    agents: Option<usize>,
    /// Environment steps per agent.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    eval_interval: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, short)]
    output: Option<PathBuf>,

    #[arg(long, value_enum)]
    task: Option<TaskKind>,
    /// Task in the text format (overrides --task).
    #[arg(long)]
    task_file: Option<PathBuf>,
    #[arg(long)]
    length: Option<u32>,
    #[arg(long)]
    branch_len: Option<u32>,
    #[arg(long)]
    crossroad_rank: Option<u32>,
    #[arg(long)]
    merged_len: Option<u32>,
    #[arg(long)]
    n_paths: Option<u32>,
    #[arg(long)]
    optimal_len: Option<u32>,
    #[arg(long)]
    suboptimal_len: Option<u32>,
    #[arg(long)]
    optimal_index: Option<u32>,
    #[arg(long)]
    optimal_scale: Option<f64>,
    /// Episode length in selection steps.
    #[arg(long)]
    horizon: Option<u32>,

    #[arg(long, value_enum)]
    topology: Option<TopologyKind>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    rewire_prob: Option<f64>,
    #[arg(long)]
    visit_prob: Option<f64>,
    #[arg(long)]
    visit_len: Option<u32>,
    #[arg(long)]
    high_len: Option<u32>,
    #[arg(long)]
    low_len: Option<u32>,

    #[arg(long)]
    share_prob: Option<f64>,
    #[arg(long)]
    share_len: Option<usize>,
    #[arg(long, value_enum)]
    share_mode: Option<ModeArg>,

    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    replay_capacity: Option<usize>,
    #[arg(long)]
    target_update_interval: Option<u64>,
    #[arg(long)]
    train_every: Option<u64>,
    #[arg(long)]
    prioritized: Option<bool>,
    #[arg(long)]
    priority_alpha: Option<f64>,
    #[arg(long)]
    priority_beta: Option<f64>,
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value.clone() {
            $target = v;
        }
    };
}

impl ConfigArgs {
    fn resolve(&self) -> groupcraft::Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(p)) => ExperimentConfig::preset(p)?,
            (None, None) => ExperimentConfig::default(),
        };
        set!(cfg.name, self.name);
        set!(cfg.agents, self.agents);
        set!(cfg.steps, self.steps);
        set!(cfg.eval_interval, self.eval_interval);
        set!(cfg.trials, self.trials);
        set!(cfg.seed, self.seed);
        set!(cfg.workers, self.workers);
        set!(cfg.output, self.output);
        self.apply_task(&mut cfg.task);
        self.apply_topology(&mut cfg.topology);
        set!(cfg.sharing.probability, self.share_prob);
        set!(cfg.sharing.batch_len, self.share_len);
        if let Some(m) = self.share_mode {
            cfg.sharing.mode = match m {
                ModeArg::Uniform => ShareMode::Uniform,
                ModeArg::Prioritized => ShareMode::Prioritized,
            };
        }
        self.apply_learner(&mut cfg.learner);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_task(&self, task: &mut TaskConfig) {
        if let Some(path) = &self.task_file {
            *task = TaskConfig::File { path: path.clone() };
            return;
        }
        if let Some(kind) = self.task {
            let same = matches!(
                (kind, &*task),
                (TaskKind::SinglePath, TaskConfig::SinglePath { .. })
                    | (TaskKind::MergingPaths, TaskConfig::MergingPaths { .. })
                    | (TaskKind::BestOfN, TaskConfig::BestOfN { .. })
                    | (TaskKind::Coins, TaskConfig::Coins)
            );
            if !same {
                *task = match kind {
                    TaskKind::SinglePath => TaskConfig::SinglePath {
                        length: SinglePath::default().length,
                        horizon: None,
                    },
                    TaskKind::MergingPaths => TaskConfig::default(),
                    TaskKind::BestOfN => {
                        let b = BestOfN::default();
                        TaskConfig::BestOfN {
                            n_paths: b.n_paths,
                            optimal_len: b.optimal_len,
                            suboptimal_len: b.suboptimal_len,
                            optimal_index: b.optimal_index,
                            optimal_scale: b.optimal_scale,
                            horizon: None,
                        }
                    }
                    TaskKind::Coins => TaskConfig::Coins,
                };
            }
        }
        match task {
            TaskConfig::SinglePath { length, horizon } => {
                set!(*length, self.length);
                set_opt(horizon, self.horizon);
            }
            TaskConfig::MergingPaths {
                branch_len,
                crossroad_rank,
                merged_len,
                horizon,
            } => {
                set!(*branch_len, self.branch_len);
                set!(*crossroad_rank, self.crossroad_rank);
                set!(*merged_len, self.merged_len);
                set_opt(horizon, self.horizon);
            }
            TaskConfig::BestOfN {
                n_paths,
                optimal_len,
                suboptimal_len,
                optimal_index,
                optimal_scale,
                horizon,
            } => {
                set!(*n_paths, self.n_paths);
                set!(*optimal_len, self.optimal_len);
                set!(*suboptimal_len, self.suboptimal_len);
                set!(*optimal_index, self.optimal_index);
                set!(*optimal_scale, self.optimal_scale);
                set_opt(horizon, self.horizon);
            }
            TaskConfig::Coins | TaskConfig::File { .. } => {}
        }
    }

    fn apply_topology(&self, topo: &mut TopologyConfig) {
        if let Some(kind) = self.topology {
            *topo = match kind {
                TopologyKind::FullyConnected => TopologyConfig::FullyConnected,
                TopologyKind::SmallWorld => TopologyConfig::SmallWorld {
                    neighbors: 4,
                    rewire_prob: 0.2,
                },
                TopologyKind::Ring => TopologyConfig::Ring,
                TopologyKind::Dynamic => TopologyConfig::Dynamic {
                    visit_prob: 0.05,
                    visit_len: 10,
                },
                TopologyKind::DynamicPeriodic => TopologyConfig::DynamicPeriodic {
                    high_len: 10,
                    low_len: 100,
                },
                TopologyKind::NoSharing => TopologyConfig::NoSharing,
            };
        }
        match topo {
            TopologyConfig::SmallWorld {
                neighbors,
                rewire_prob,
            } => {
                set!(*neighbors, self.neighbors);
                set!(*rewire_prob, self.rewire_prob);
            }
            TopologyConfig::Dynamic {
                visit_prob,
                visit_len,
            } => {
                set!(*visit_prob, self.visit_prob);
                set!(*visit_len, self.visit_len);
            }
            TopologyConfig::DynamicPeriodic { high_len, low_len } => {
                set!(*high_len, self.high_len);
                set!(*low_len, self.low_len);
            }
            _ => {}
        }
    }

    fn apply_learner(&self, l: &mut LearnerConfig) {
        set!(l.hidden, self.hidden);
        set!(l.learning_rate, self.learning_rate);
        set!(l.gamma, self.gamma);
        set!(l.epsilon, self.epsilon);
        set!(l.batch_size, self.batch_size);
        set!(l.replay_capacity, self.replay_capacity);
        set!(l.target_update_interval, self.target_update_interval);
        set!(l.train_every, self.train_every);
        set!(l.prioritized, self.prioritized);
        set!(l.priority_alpha, self.priority_alpha);
        set!(l.priority_beta, self.priority_beta);
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn report(summary: &ExperimentSummary) {
    println!("{} ({}), config {}", summary.name, summary.task, &summary.config_hash[..12]);
    for s in &summary.stats {
        println!("  {:<24} {:>12.4} ± {:<10.4} (n={})", s.metric, s.mean, s.ci_half, s.n);
    }
    for t in summary.trials.iter().filter(|t| !t.complete) {
        eprintln!("trial {} failed: {}", t.trial, t.error.as_deref().unwrap_or("unknown error"));
    }
}

fn run(command: Command) -> groupcraft::Result<bool> {
    match command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let out = cfg.output.join(&cfg.name);
            let summary = run_experiment(&cfg, Some(&out))?;
            report(&summary);
            println!("records in {}", out.display());
            Ok(summary.failed() == 0)
        }
        Command::Sweep {
            config,
            batch_lens,
            probs,
        } => {
            let cfg = config.resolve()?;
            let out = cfg.output.join(format!("{}-sweep", cfg.name));
            let cells = sweep(&cfg, &batch_lens, &probs, Some(&out))?;
            std::fs::write(out.join("heatmap.svg"), plot::sweep_heatmap(&cells))
                .map_err(|e| groupcraft::Error::Config(format!("{}: {e}", out.display())))?;
            println!("{:>10} {:>8} {:>14}", "batch_len", "prob", "group_success");
            for c in &cells {
                println!("{:>10} {:>8} {:>8.3} ± {:.3}", c.batch_len, c.probability, c.group_success, c.ci_half);
            }
            Ok(true)
        }
        Command::Analyze { dir } => {
            let r = analyze(&dir)?;
            report(&r.summary);
            if r.mismatched.is_empty() {
                println!("{} trials recomputed; all metric tables match", r.trials);
            } else {
                eprintln!("metric tables differ from event streams in trials {:?}", r.mismatched);
            }
            Ok(r.mismatched.is_empty() && r.summary.failed() == 0)
        }
        Command::Plot { dirs, out } => {
            let refs: Vec<&Path> = dirs.iter().map(PathBuf::as_path).collect();
            let labels = dirs
                .iter()
                .map(|d| load_summary(d).map(|s| s.name))
                .collect::<groupcraft::Result<Vec<_>>>()?;
            for notice in plot::render_experiments(&refs, &labels, &out)? {
                eprintln!("{notice}");
            }
            println!("charts in {}", out.display());
            Ok(true)
        }
        Command::Compare {
            dirs,
            metric,
            alpha,
            out,
        } => {
            let summaries = dirs.iter().map(|d| load_summary(d)).collect::<groupcraft::Result<Vec<_>>>()?;
            let cmp = compare(&summaries, &metric, alpha)?;
            plot::write_comparison(&cmp, &summaries, &out)?;
            print!("{}", std::fs::read_to_string(out.join("compare.txt")).unwrap_or_default());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
