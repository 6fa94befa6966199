mod common;

use groupcraft::env::{BitObs, Transition};
use groupcraft::metrics::{
    conformity, decode_snapshots, diversity, group_diversity, intra_alignment, read_metrics_csv,
    trial_metrics, volatility, write_metrics_csv, BufferSnapshot, EvalPoint, MetricTracker,
};
use groupcraft::qlearner::checkpoint::Checkpoint;
use groupcraft::qlearner::{DqnAgent, LearnerConfig, ReplayBuffer};
use groupcraft::recipe::{build_best_of_n, build_merging_paths, build_single_path, parse_task, write_task};
use groupcraft::runner::{parse_events, write_event, Event, ExperimentConfig, TopologyConfig};
use groupcraft::sharing::{share_phase, ShareMode, SharingConfig};
use groupcraft::topology::{BoydScheduler, SocialGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn buffers(rng: &mut ChaCha8Rng, k: usize, cap: usize) -> Vec<ReplayBuffer> {
    (0..k)
        .map(|_| {
            let mut b = ReplayBuffer::new(cap);
            for _ in 0..rng.random_range(0..12) {
                let mut s = BitObs::zeros(5);
                s.set(rng.random_range(0..5), true);
                b.insert(Transition {
                    state: s.clone(),
                    action: rng.random_range(0..3),
                    next_state: s,
                    reward: rng.random_range(0..5) as f64,
                    terminal: false,
                });
            }
            b
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn small_world_graphs_are_simple(seed: u64, k in 5usize..30, half in 1usize..3, beta in 0.0f64..=1.0) {
        let n = 2 * half;
        prop_assume!(n < k);
        let g = SocialGraph::watts_strogatz(k, n, beta, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(g.is_simple_undirected());
        prop_assert_eq!(g.edge_count(), k * n / 2);
    }

    #[test]
    fn boyd_graphs_keep_pair_structure(seed: u64, pairs in 2usize..8, p in 0.0f64..=1.0, len in 1u32..5) {
        let mut s = BoydScheduler::new(2 * pairs, p, len).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let g = s.step(&mut rng);
            prop_assert!(g.is_simple_undirected());
            let expected = if s.active_visit().is_some() { pairs + 1 } else { pairs };
            prop_assert_eq!(g.edge_count(), expected);
        }
    }

    #[test]
    fn sharing_never_touches_senders_and_sizes_add_up(seed: u64, k in 2usize..7, len in 1usize..8, p in 0.0f64..=1.0, cap in 1usize..20, prioritized: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = SocialGraph::fully_connected(k);
        let mut bufs = buffers(&mut rng, k, cap);
        let before: Vec<usize> = bufs.iter().map(|b| b.len()).collect();
        let cfg = SharingConfig {
            probability: p,
            batch_len: len,
            mode: if prioritized { ShareMode::Prioritized } else { ShareMode::Uniform },
        };
        let log = share_phase(&mut bufs, &g, &cfg, &mut rng).unwrap();
        for r in 0..k {
            let incoming: usize = log.iter().filter(|l| l.receiver == r).map(|l| l.count).sum();
            prop_assert_eq!(bufs[r].len(), (before[r] + incoming).min(cap));
        }
        for l in &log {
            prop_assert_eq!(l.count, len.min(before[l.sender]));
        }
    }

    #[test]
    fn snapshots_roundtrip(seed: u64, n in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snaps: Vec<BufferSnapshot> = (0..n).map(|_| {
            let k = rng.random_range(1..5);
            common::random_snapshot(&mut rng, k)
        }).collect();
        let mut bytes = Vec::new();
        for s in &snaps {
            s.encode_into(&mut bytes);
        }
        prop_assert_eq!(decode_snapshots(&bytes).unwrap(), snaps);
    }

    #[test]
    fn truncated_snapshots_are_rejected(seed: u64, cut in 1usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bytes = common::random_snapshot(&mut rng, 2).encode();
        let cut = cut.min(bytes.len() - 1);
        prop_assert!(decode_snapshots(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn tasks_roundtrip_through_text(len in 1u32..10, b in 2u32..7, c in 1u32..6, m in 1u32..5, n in 2u32..5, opt in 1u32..5) {
        let mut tasks = vec![build_single_path(len).unwrap()];
        // some shapes are rejected because the merged path would not be optimal
        if let Ok(t) = build_merging_paths(b, c, m) {
            tasks.push(t);
        }
        if let Ok(t) = build_best_of_n(n, opt + 1, opt, n - 1) {
            tasks.push(t);
        }
        for t in tasks {
            let text = write_task(&t);
            let back = parse_task(&text).unwrap();
            prop_assert_eq!(write_task(&back), text);
            prop_assert_eq!(back.optimal_return, t.optimal_return);
            prop_assert!(back.book.rewards_follow_hierarchy());
        }
    }

    #[test]
    fn checkpoints_roundtrip_bitwise(seed: u64, h in 1usize..6, steps in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = LearnerConfig { hidden: vec![h, h], batch_size: 2, ..Default::default() };
        let mut agent = DqnAgent::new(4, 3, cfg, &mut rng).unwrap();
        for b in buffers(&mut ChaCha8Rng::seed_from_u64(seed), 1, 50).remove(0).iter() {
            let mut t = b.clone();
            t.state = BitObs::zeros(4);
            t.next_state = BitObs::zeros(4);
            agent.buffer.insert(t);
        }
        for _ in 0..steps {
            if agent.buffer.len() >= 2 {
                agent.train_step(2, &mut rng).unwrap();
            }
        }
        let ck = Checkpoint::capture(&agent);
        prop_assert_eq!(Checkpoint::parse(&ck.write()).unwrap(), ck);
    }

    #[test]
    fn metric_bounds_hold(seed: u64, k in 1usize..8, points in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let evals: Vec<EvalPoint> = (0..points).map(|i| common::random_eval(&mut rng, k, 100 * i as u64)).collect();
        for e in &evals {
            let c = conformity(e).unwrap();
            prop_assert!(c >= 1.0 / k as f64 - 1e-12 && c <= 1.0);
        }
        for a in 0..k {
            let series: Vec<Vec<u32>> = evals.iter().map(|e| e.agents[a].trajectory.clone()).collect();
            let v = volatility(&series).unwrap();
            prop_assert!(v.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= 1));
            prop_assert!(v[points - 1] < points as u64);
        }
        if k >= 2 {
            let s = common::random_snapshot(&mut rng, k);
            let a = intra_alignment(&s).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            let gd = group_diversity(&s);
            prop_assert!(s.buffers.iter().all(|b| diversity(b) <= gd));
        }
    }

    #[test]
    fn metric_tables_roundtrip_through_csv(seed: u64, k in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let evals: Vec<EvalPoint> = (1..=3).map(|i| common::random_eval(&mut rng, k, 100 * i)).collect();
        let snaps: Vec<BufferSnapshot> = evals.iter().map(|e| {
            let mut s = common::random_snapshot(&mut rng, k);
            s.step = e.step;
            s
        }).collect();
        let mut tracker = MetricTracker::new(seed);
        for (e, s) in evals.iter().zip(&snaps) {
            tracker.record_eval(e).unwrap();
            tracker.record_snapshot(s);
        }
        let online = tracker.finish(300).unwrap();
        prop_assert_eq!(&online, &trial_metrics(seed, &evals, &snaps, 300).unwrap());
        let mut csv = Vec::new();
        write_metrics_csv(&online, &mut csv).unwrap();
        prop_assert_eq!(read_metrics_csv(csv.as_slice()).unwrap(), online);
    }

    #[test]
    fn events_roundtrip(seed: u64, k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = rng.random();
        let events = vec![
            Event::Graph { episode: rng.random(), step: rng.random(), edges: SocialGraph::fully_connected(k).edges() },
            Event::Eval(common::random_eval(&mut rng, k, step)),
        ];
        let mut text = Vec::new();
        for e in &events {
            write_event(&mut text, e).unwrap();
        }
        prop_assert_eq!(parse_events(std::str::from_utf8(&text).unwrap()).unwrap(), events);
    }

    #[test]
    fn configs_roundtrip_through_toml(agents in 2usize..20, steps in 1u64..1_000_000, p in 0.0f64..=1.0, len in 1usize..50) {
        let mut cfg = ExperimentConfig::preset("dynamic").unwrap();
        cfg.agents = agents + agents % 2;
        cfg.steps = steps;
        cfg.sharing.probability = p;
        cfg.sharing.batch_len = len;
        cfg.topology = TopologyConfig::Dynamic { visit_prob: p, visit_len: 3 };
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }
}
