//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use gepo::env::{enumerate_state_space, load_layout};
use gepo::graph::{IdentityEmbedder, StateKey, TransitionGraph};
use gepo::policy::{composite_loss, Aggregation, Algorithm, OptimConfig, PolicyParams, UpdateBatch};
use gepo::trajectory::{Step, Trajectory};
use num_rational::Ratio;
use rand::Rng;

pub type Q = Ratio<i64>;

/// Random simple digraph as adjacency lists; self-loops appear with a small
/// probability so callers can check they are ignored.
pub fn random_digraph<R: Rng>(rng: &mut R, max_n: usize) -> Vec<Vec<usize>> {
    let n = rng.gen_range(1..=max_n);
    let density = rng.gen_range(0.1..=0.5);
    (0..n)
        .map(|a| (0..n).filter(|&b| if a == b { rng.gen_bool(0.05) } else { rng.gen_bool(density) }).collect())
        .collect()
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[s] = Some(0);
    let mut frontier = vec![s];
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in &adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d);
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    dist
}

fn shortest_paths(adj: &[Vec<usize>], dist: &[Option<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn walk(adj: &[Vec<usize>], dist: &[Option<usize>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        let du = dist[u].unwrap();
        for &w in &adj[u] {
            if w != u && dist[w] == Some(du + 1) && dist[w] <= dist[t] {
                path.push(w);
                walk(adj, dist, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(adj, dist, t, &mut vec![s], &mut out);
    out
}

/// Normalized node and edge betweenness by listing every shortest path of
/// every ordered pair, in exact rational arithmetic.
pub fn brute_force_betweenness(adj: &[Vec<usize>]) -> (Vec<Q>, BTreeMap<(usize, usize), Q>) {
    let n = adj.len();
    let mut node = vec![Q::from_integer(0); n];
    let mut edge: BTreeMap<(usize, usize), Q> = BTreeMap::new();
    for (a, out) in adj.iter().enumerate() {
        for &b in out {
            if a != b {
                edge.insert((a, b), Q::from_integer(0));
            }
        }
    }
    for s in 0..n {
        let dist = bfs(adj, s);
        for t in 0..n {
            if t == s || dist[t].is_none() {
                continue;
            }
            let paths = shortest_paths(adj, &dist, s, t);
            let sigma = paths.len() as i64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    node[v] += Q::new(1, sigma);
                }
                for w in p.windows(2) {
                    *edge.get_mut(&(w[0], w[1])).unwrap() += Q::new(1, sigma);
                }
            }
        }
    }
    let nn = n as i64;
    let node_norm = if n >= 3 { Some(Q::from_integer((nn - 1) * (nn - 2))) } else { None };
    let node = node.into_iter().map(|x| node_norm.map_or(Q::from_integer(0), |d| x / d)).collect();
    let edge_norm = Q::from_integer((nn * (nn - 1)).max(1));
    let edge = edge.into_iter().map(|(k, v)| (k, v / edge_norm)).collect();
    (node, edge)
}

pub fn to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Loads an adjacency list into a graph, vertex `i` becoming `StateKey(i)`.
pub fn graph_from_adjacency(adj: &[Vec<usize>]) -> TransitionGraph<f64> {
    let mut g = TransitionGraph::new();
    for i in 0..adj.len() {
        let k = g.map_state(&format!("v{i}"), &IdentityEmbedder, 1.0).unwrap();
        assert_eq!(k, StateKey(i));
    }
    for (a, out) in adj.iter().enumerate() {
        for &b in out {
            g.record_trajectory(&Trajectory::from_keys(&[StateKey(a), StateKey(b)], 4, 0.0)).unwrap();
        }
    }
    g
}

/// Exhaustive observation graph of a catalog layout: one vertex per distinct
/// observation text, one edge per observed transition.
pub fn observation_graph(layout: &str) -> (TransitionGraph<f64>, Vec<String>) {
    let space = enumerate_state_space(Arc::new(load_layout(layout).unwrap()));
    let mut g = TransitionGraph::new();
    let keys: Vec<StateKey> =
        space.observations.iter().map(|o| g.map_state(&o.text, &IdentityEmbedder, 1.0).unwrap()).collect();
    for &(a, _, b) in &space.transitions {
        g.record_trajectory(&Trajectory::from_keys(&[keys[a], keys[b]], 4, 0.0)).unwrap();
    }
    let mut texts = vec![String::new(); g.vertex_count()];
    for (o, k) in space.observations.iter().zip(&keys) {
        texts[k.0] = o.text.clone();
    }
    (g, texts)
}

pub fn distinct_observations(layout: &str) -> BTreeSet<String> {
    enumerate_state_space(Arc::new(load_layout(layout).unwrap())).observations.into_iter().map(|o| o.text).collect()
}

/// A random tabular batch whose old log-probabilities put each step's ratio
/// safely away from the clip kinks, alternating inside and outside the band.
pub struct GradCase {
    pub params: PolicyParams<f64>,
    pub trajectories: Vec<Trajectory<f64>>,
    pub advantages: Vec<Vec<f64>>,
    pub returns: Vec<Vec<f64>>,
    pub cfg: OptimConfig,
    pub clipped_steps: usize,
    pub unclipped_steps: usize,
}

pub fn random_grad_case<R: Rng>(rng: &mut R) -> GradCase {
    let n_actions = 4;
    let n_states = rng.gen_range(1..=5);
    let mut params = PolicyParams::new(n_actions);
    for s in 0..n_states {
        params.set_logits(StateKey(s), (0..n_actions).map(|_| rng.gen_range(-2.0..2.0)).collect());
        params.set_value(StateKey(s), rng.gen_range(-1.0..1.0));
    }
    let eps = 0.2;
    let aggregation = if rng.gen_bool(0.5) { Aggregation::Sum } else { Aggregation::LengthNormalized };
    let cfg = OptimConfig {
        clip_epsilon: eps,
        learning_rate: 0.1,
        value_coeff: rng.gen_range(0.1..1.0),
        entropy_coeff: rng.gen_range(0.0..0.1),
        epochs_per_iter: 1,
        algorithm: Algorithm::Gepo,
        aggregation: Some(aggregation),
    };
    let mut trajectories = Vec::new();
    let mut advantages = Vec::new();
    let mut returns = Vec::new();
    let (mut clipped, mut unclipped) = (0, 0);
    for _ in 0..rng.gen_range(1..=4) {
        let len = rng.gen_range(1..=6);
        let mut steps = Vec::new();
        let mut adv = Vec::new();
        for _ in 0..len {
            let state = StateKey(rng.gen_range(0..n_states));
            let action = rng.gen_range(0..n_actions);
            let lp = params.log_prob(state, action);
            // ratio well inside the band, or well outside on either side
            let ratio = match rng.gen_range(0..3) {
                0 => rng.gen_range(0.85..1.15),
                1 => rng.gen_range(1.3..2.0),
                _ => rng.gen_range(0.3..0.7),
            };
            let a: f64 = rng.gen_range(0.2..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let active_clip = (ratio > 1.0 + eps && a > 0.0) || (ratio < 1.0 - eps && a < 0.0);
            if active_clip {
                clipped += 1;
            } else {
                unclipped += 1;
            }
            steps.push(Step {
                observation: format!("s{}", state.0),
                state,
                action,
                reward: 0.0,
                old_log_prob: lp - ratio.ln(),
            });
            adv.push(a);
        }
        let final_state = StateKey(rng.gen_range(0..n_states));
        returns.push((0..len).map(|_| rng.gen_range(-1.0..2.0)).collect());
        advantages.push(adv);
        trajectories.push(Trajectory {
            steps,
            final_observation: format!("s{}", final_state.0),
            final_state,
            success: false,
        });
    }
    GradCase { params, trajectories, advantages, returns, cfg, clipped_steps: clipped, unclipped_steps: unclipped }
}

/// Worst relative error between the analytic gradient and central
/// differences with step `h`.
pub fn gradient_error(case: &GradCase, h: f64) -> f64 {
    let batch = UpdateBatch { trajectories: &case.trajectories, advantages: &case.advantages, returns: &case.returns };
    let (_, grads) = composite_loss(&case.params, &batch, &case.cfg).unwrap();
    let loss_at = |p: &PolicyParams<f64>| composite_loss(p, &batch, &case.cfg).unwrap().0.total;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
    let mut worst = 0.0f64;
    let states: Vec<StateKey> = case.params.states().collect();
    for &s in &states {
        let analytic = grads.logits.get(&s).cloned().unwrap_or_else(|| vec![0.0; 4]);
        for j in 0..4 {
            let mut plus = case.params.clone();
            let mut minus = case.params.clone();
            let mut z = case.params.logits(s);
            z[j] += h;
            plus.set_logits(s, z.clone());
            z[j] -= 2.0 * h;
            minus.set_logits(s, z);
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            worst = worst.max(rel(analytic[j], numeric));
        }
        let analytic = grads.values.get(&s).copied().unwrap_or(0.0);
        let mut plus = case.params.clone();
        let mut minus = case.params.clone();
        plus.set_value(s, case.params.value(s) + h);
        minus.set_value(s, case.params.value(s) - h);
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
        worst = worst.max(rel(analytic, numeric));
    }
    worst
}
