mod common;

use groupcraft::env::{BitObs, Transition};
use groupcraft::qlearner::{Adam, DqnAgent, LearnerConfig, Mlp, ReplayBuffer, ADAM_EPSILON, PRIORITY_FLOOR};
use groupcraft::runner::{run_experiment, ExperimentConfig, TaskConfig, TopologyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Chi-square critical value at the 3-sigma level (two-sided normal 0.9973).
fn critical(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.9973)
}

fn transition(rng: &mut impl Rng, width: usize, terminal: bool) -> Transition {
    let mut state = BitObs::zeros(width);
    let mut next_state = BitObs::zeros(width);
    for i in 0..width {
        state.set(i, rng.random_bool(0.5));
        next_state.set(i, rng.random_bool(0.5));
    }
    Transition {
        state,
        action: rng.random_range(0..3),
        next_state,
        reward: rng.random_range(-1.0..1.0),
        terminal,
    }
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..20 {
        let err = common::gradient_check(seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn constant_gradient_adam_steps_match_closed_form() {
    // With a constant gradient the bias-corrected moments stay exactly g and
    // g^2, so every step moves a parameter by lr * g / (|g| + eps).
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = Mlp::<f64>::glorot(&[3, 4, 2], &mut rng);
    let mut grads = Mlp::<f64>::zeros(&params.widths());
    for mut t in grads.tensors_mut() {
        t.mapv_inplace(|_| rng.random_range(-3.0..3.0));
    }
    let lr = 1e-3;
    let mut adam = Adam::new(&params, lr);
    let start = params.clone();
    let steps = 5;
    for _ in 0..steps {
        adam.update(&mut params, &grads);
    }
    let flat = |m: &Mlp<f64>| m.tensors().flat_map(|t| t.to_vec()).collect::<Vec<_>>();
    for ((p0, p1), g) in flat(&start).into_iter().zip(flat(&params)).zip(flat(&grads)) {
        let expected = p0 - steps as f64 * lr * g / (g.abs() + ADAM_EPSILON);
        assert!((p1 - expected).abs() < 1e-10, "{p1} vs {expected}");
    }
}

#[test]
fn terminal_targets_are_the_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut agent = DqnAgent::new(6, 3, LearnerConfig::default(), &mut rng).unwrap();
    let batch: Vec<Transition> = (0..16).map(|i| transition(&mut rng, 6, i % 2 == 0)).collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let targets = agent.td_targets(&refs).unwrap();
    for (t, y) in batch.iter().zip(&targets) {
        if t.terminal {
            assert_eq!(*y, t.reward);
        } else {
            let q = agent.target.forward(&t.next_state.to_dense().iter().map(|&v| v as f32).collect::<Vec<_>>()).unwrap();
            let best = q.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            assert!((y - (t.reward + 0.9 * best as f64)).abs() < 1e-9);
        }
    }
}

#[test]
fn full_exploration_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = LearnerConfig {
        epsilon: 1.0,
        ..Default::default()
    };
    let actions = 5;
    let mut agent = DqnAgent::new(8, actions, cfg, &mut rng).unwrap();
    let obs = BitObs::zeros(8);
    let mut counts = vec![0; actions];
    for _ in 0..100_000 {
        counts[agent.act(&obs, &mut rng, false).unwrap()] += 1;
    }
    let stat = common::chi_square(&counts, &vec![1.0 / actions as f64; actions]);
    assert!(stat < critical(actions - 1), "chi-square {stat}, counts {counts:?}");
}

#[test]
fn prioritized_frequencies_follow_priorities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let alpha = 0.6;
    let mut buf = ReplayBuffer::prioritized(16, alpha);
    for _ in 0..8 {
        buf.insert(transition(&mut rng, 4, false));
    }
    let td = [0.0, 0.1, 0.5, 1.0, 2.0, 3.0, 0.01, 5.0];
    let slots: Vec<usize> = (0..8).collect();
    buf.update_priorities(&slots, &td);
    let weights: Vec<f64> = td.iter().map(|e| (e + PRIORITY_FLOOR).powf(alpha)).collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let (drawn, reported) = buf.sample_proportional(100_000, &mut rng).unwrap();
    let mut counts = vec![0; 8];
    for (&s, &p) in drawn.iter().zip(&reported) {
        counts[s] += 1;
        assert!((p - probs[s]).abs() < 1e-12);
    }
    // slot 0 has almost no mass; merge it into its neighbour so expected counts stay large
    let merged_counts = [&[counts[0] + counts[6]][..], &counts[1..6], &[counts[7]]].concat();
    let merged_probs = [&[probs[0] + probs[6]][..], &probs[1..6], &[probs[7]]].concat();
    let stat = common::chi_square(&merged_counts, &merged_probs);
    assert!(stat < critical(merged_counts.len() - 1), "chi-square {stat}, counts {counts:?}");
}

#[test]
fn dominant_priority_dominates_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut buf = ReplayBuffer::prioritized(3, 1.0);
    for _ in 0..3 {
        buf.insert(transition(&mut rng, 4, false));
    }
    buf.update_priorities(&[0, 1, 2], &[1.0, 0.0, 0.0]);
    let (drawn, _) = buf.sample_proportional(100_000, &mut rng).unwrap();
    let first = drawn.iter().filter(|&&s| s == 0).count() as f64 / drawn.len() as f64;
    assert!(first > 0.999, "{first}");
}

#[test]
fn target_network_is_frozen_between_copies() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = LearnerConfig {
        hidden: vec![8],
        batch_size: 4,
        target_update_interval: 10,
        ..Default::default()
    };
    let mut agent = DqnAgent::new(4, 3, cfg, &mut rng).unwrap();
    for _ in 0..4 {
        agent.buffer.insert(transition(&mut rng, 4, false));
    }
    let frozen = agent.target.clone();
    for step in 1..=25 {
        agent.train_step(4, &mut rng).unwrap();
        match step {
            10 | 20 => {
                assert_eq!(agent.target, agent.online);
                assert_ne!(agent.target, frozen);
            }
            s if s < 10 => assert_eq!(agent.target, frozen),
            _ => {}
        }
    }
}

#[test]
fn single_agent_learns_two_step_path() {
    let cfg = ExperimentConfig {
        name: "sanity".into(),
        agents: 1,
        steps: 20_000,
        eval_interval: 2_000,
        trials: 10,
        seed: 2024,
        workers: 0,
        task: TaskConfig::SinglePath {
            length: 2,
            horizon: None,
        },
        topology: TopologyConfig::NoSharing,
        ..Default::default()
    };
    let summary = run_experiment(&cfg, None).unwrap();
    let successes = summary.values("group_success").iter().filter(|&&v| v == 1.0).count();
    assert!(successes >= 9, "only {successes}/10 seeds reached the optimum");
}
