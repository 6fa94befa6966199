//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use groupcraft::coins::{CoinsEnv, ACTION_LEFT, ACTION_RIGHT, LEFT_FIRE, RIGHT_FIRE};
use groupcraft::env::Environment;
use groupcraft::metrics::{AgentEval, BufferSnapshot, EvalPoint, Fingerprint};
use groupcraft::qlearner::{Activations, Mlp};
use groupcraft::recipe::{
    build_best_of_n, build_merging_paths, build_single_path, ElementId, RecipeBook, TaskSpec,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Max relative error between the analytic gradient of the (optionally
/// weighted) TD loss and central differences, on a random `4 -> h -> h -> 3`
/// network in f64.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h1, h2) = (rng.random_range(3..9), rng.random_range(3..9));
    let mut net = Mlp::<f64>::glorot(&[4, h1, h2, 3], &mut rng);
    for l in &mut net.layers {
        l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let batch = rng.random_range(1..9);
    let states = Array2::from_shape_fn((batch, 4), |_| rng.random_range(-1.0..1.0));
    let actions: Vec<usize> = (0..batch).map(|_| rng.random_range(0..3)).collect();
    let targets: Vec<f64> = (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect();
    let weights: Option<Vec<f64>> =
        (seed % 2 == 1).then(|| (0..batch).map(|_| rng.random_range(0.1..1.0)).collect());

    let eval = |net: &Mlp<f64>, grads: &mut Mlp<f64>| {
        let (mut acts, mut d) = (Activations::default(), Array2::zeros((0, 0)));
        net.td_loss_grad(states.view(), &actions, &targets, weights.as_deref(), &mut acts, &mut d, grads)
            .unwrap()
            .0
    };
    let mut grads = Mlp::zeros(&net.widths());
    eval(&net, &mut grads);
    let analytic: Vec<f64> = grads.tensors().flat_map(|t| t.to_vec()).collect();

    let h = 1e-5;
    let mut scratch = Mlp::zeros(&net.widths());
    let mut worst = 0.0f64;
    for (idx, &a) in analytic.iter().enumerate() {
        let mut probe = |delta: f64| {
            let mut p = net.clone();
            let mut seen = 0;
            for mut t in p.tensors_mut() {
                if idx < seen + t.len() {
                    t[idx - seen] += delta;
                    break;
                }
                seen += t.len();
            }
            eval(&p, &mut scratch)
        };
        let numeric = (probe(h) - probe(-h)) / (2.0 * h);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

/// Best achievable return by exhaustive, unmemoized search over craft
/// sequences of at most `horizon / 2` combinations.
pub fn brute_force_best(book: &RecipeBook, horizon: u32) -> f64 {
    fn go(book: &RecipeBook, have: &mut Vec<bool>, crafts: u32) -> f64 {
        if crafts == 0 {
            return 0.0;
        }
        let mut best = 0.0f64;
        let n = have.len();
        for a in 0..n {
            for b in a..n {
                if !(have[a] && have[b]) {
                    continue;
                }
                if let Some(z) = book.lookup(ElementId(a as u32), ElementId(b as u32)) {
                    if !have[z.index()] {
                        have[z.index()] = true;
                        best = best.max(book.reward(z) + go(book, have, crafts - 1));
                        have[z.index()] = false;
                    }
                }
            }
        }
        best
    }
    let mut have = vec![false; book.len()];
    for id in book.initial_set() {
        have[id.index()] = true;
    }
    go(book, &mut have, horizon / 2)
}

/// Builder tasks small enough for exhaustive search.
pub fn small_tasks() -> Vec<TaskSpec> {
    let mut tasks = Vec::new();
    for len in 1..=7 {
        tasks.push(build_single_path(len).unwrap());
    }
    for (b, c, m) in [(2, 1, 1), (3, 1, 2), (3, 2, 1), (4, 2, 2), (4, 1, 2), (5, 3, 2)] {
        tasks.push(build_merging_paths(b, c, m).unwrap());
    }
    for (n, opt, sub, idx) in [(2, 2, 1, 0), (2, 3, 2, 1), (3, 3, 2, 2), (2, 4, 3, 0), (3, 2, 1, 1)] {
        tasks.push(build_best_of_n(n, opt, sub, idx).unwrap());
    }
    tasks
}

pub struct CoinsOutcomes {
    pub best: f64,
    /// Returns of episodes that ended in the left fire.
    pub left_fire_returns: Vec<f64>,
    /// Whether every episode with the best return ended in the right fire.
    pub best_ends_right: bool,
}

/// Plays all 2^14 action sequences (the episode cap) through the corridor.
pub fn coins_exhaustive() -> CoinsOutcomes {
    let mut out = CoinsOutcomes {
        best: f64::MIN,
        left_fire_returns: Vec::new(),
        best_ends_right: true,
    };
    let mut ends = Vec::with_capacity(1 << 14);
    for bits in 0u32..(1 << 14) {
        let mut env = CoinsEnv::new();
        env.reset();
        let mut ret = 0.0;
        for i in 0..14 {
            let a = if bits >> i & 1 == 0 { ACTION_LEFT } else { ACTION_RIGHT };
            let st = env.step(a).unwrap();
            ret += st.reward;
            if st.terminal {
                break;
            }
        }
        let end = env.state().position;
        if end == LEFT_FIRE {
            out.left_fire_returns.push(ret);
        }
        out.best = out.best.max(ret);
        ends.push((ret, end));
    }
    out.best_ends_right = ends.iter().filter(|e| e.0 == out.best).all(|e| e.1 == RIGHT_FIRE);
    out
}

/// Largest return over uniform random rollouts.
pub fn max_random_return(env: &mut dyn Environment, rollouts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::MIN;
    for _ in 0..rollouts {
        env.reset();
        let mut ret = 0.0;
        loop {
            let st = env.step(rng.random_range(0..env.action_count())).unwrap();
            ret += st.reward;
            if st.terminal {
                break;
            }
        }
        best = best.max(ret);
    }
    best
}

// Metric oracles: deliberately naive sort-and-scan versions.

fn dedup(v: &[Fingerprint]) -> Vec<Fingerprint> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn common(a: &[Fingerprint], b: &[Fingerprint]) -> usize {
    a.iter().filter(|x| b.contains(x)).count()
}

pub fn naive_conformity(p: &EvalPoint) -> f64 {
    let finals: Vec<Option<u32>> = p.agents.iter().map(|a| a.trajectory.last().copied()).collect();
    let best = finals
        .iter()
        .map(|f| finals.iter().filter(|g| *g == f).count())
        .max()
        .unwrap();
    best as f64 / finals.len() as f64
}

pub fn naive_volatility(series: &[Vec<u32>]) -> Vec<f64> {
    (0..series.len())
        .map(|t| (1..=t).filter(|&i| series[i] != series[i - 1]).count() as f64)
        .collect()
}

pub fn naive_diversity(b: &[Fingerprint]) -> usize {
    dedup(b).len()
}

pub fn naive_group_diversity(s: &BufferSnapshot) -> usize {
    dedup(&s.buffers.concat()).len()
}

pub fn naive_intra(s: &BufferSnapshot) -> f64 {
    let u: Vec<Vec<Fingerprint>> = s.buffers.iter().map(|b| dedup(b)).collect();
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            total += common(&u[i], &u[j]) as f64 / u[i].len().min(u[j].len()) as f64;
            pairs += 1;
        }
    }
    total / pairs as f64
}

pub fn naive_inter(a: &BufferSnapshot, b: &BufferSnapshot) -> f64 {
    let (ua, ub) = (dedup(&a.buffers.concat()), dedup(&b.buffers.concat()));
    common(&ua, &ub) as f64 / ua.len().min(ub.len()) as f64
}

/// Snapshot with `k` non-empty buffers drawn from a small fingerprint pool so
/// overlaps are common.
pub fn random_snapshot(rng: &mut impl Rng, k: usize) -> BufferSnapshot {
    let pool = rng.random_range(1..60u128);
    BufferSnapshot {
        step: rng.random_range(0..10_000),
        buffers: (0..k)
            .map(|_| {
                let n = rng.random_range(1..=100);
                (0..n)
                    .map(|_| rng.random_range(0..pool).wrapping_mul(0x9E37_79B9_7F4A_7C15_F39C_C060_5CED_C835))
                    .collect()
            })
            .collect(),
    }
}

pub fn random_eval(rng: &mut impl Rng, k: usize, step: u64) -> EvalPoint {
    EvalPoint {
        step,
        agents: (0..k)
            .map(|_| {
                let len = rng.random_range(0..4);
                AgentEval {
                    trajectory: (0..len).map(|_| rng.random_range(0..4)).collect(),
                    normalized_return: rng.random_range(0..=4) as f64 / 4.0,
                }
            })
            .collect(),
    }
}

/// Pearson chi-square statistic of `observed` counts against `probs`.
pub fn chi_square(observed: &[usize], probs: &[f64]) -> f64 {
    let n: usize = observed.iter().sum();
    observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}
