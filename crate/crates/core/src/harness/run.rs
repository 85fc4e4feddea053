//! One training run: rollouts, graph maintenance, shaping, advantages and
//! the policy update, one iteration at a time.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::advantage::estimate_advantages;
use crate::env::{load_layout, Environment, Layout, NUM_ACTIONS};
use crate::error::{GepoError, Result};
use crate::graph::{CentralityScores, EmbeddingProvider, StateKey, TransitionGraph};
use crate::policy::{grpo_advantages, ppo_advantages, update_policy, Algorithm, PolicyParams, UpdateBatch};
use crate::scalar::{mean, Scalar};
use crate::shaping::shape_trajectory;
use crate::trajectory::{Step, Trajectory};

/// SplitMix64 finalizer, used to derive independent sub-seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for rollout `index` of iteration `iteration` under run seed `seed`.
pub fn rollout_seed(seed: u64, iteration: usize, index: usize) -> u64 {
    mix(mix(mix(seed) ^ iteration as u64) ^ index as u64)
}

/// Wall-clock seconds spent in each phase of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseTimings {
    pub rollout: f64,
    pub graph_update: f64,
    pub centrality: f64,
    pub advantage: f64,
    pub update: f64,
    /// Measured around the whole iteration.
    pub total: f64,
}

impl PhaseTimings {
    pub fn phase_sum(&self) -> f64 {
        self.rollout + self.graph_update + self.centrality + self.advantage + self.update
    }

    /// Fraction of the iteration spent maintaining the graph.
    pub fn graph_share(&self) -> f64 {
        if self.total > 0.0 {
            (self.graph_update + self.centrality) / self.total
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub success_rate: f64,
    pub mean_extrinsic_return: f64,
    pub mean_shaped_return: f64,
    pub mean_length: f64,
    /// Success of the greedy policy after this iteration's update.
    pub greedy_success: f64,
    pub nodes: usize,
    pub edges: usize,
    pub loss: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
    pub timings: PhaseTimings,
}

/// An episode as sampled, before its observations are mapped to vertices.
#[derive(Debug, Clone)]
struct RawEpisode<T> {
    observations: Vec<String>,
    actions: Vec<usize>,
    rewards: Vec<T>,
    log_probs: Vec<T>,
    success: bool,
}

pub struct RunState<T: Scalar> {
    config: ExperimentConfig,
    layout: Arc<Layout>,
    embedder: Box<dyn EmbeddingProvider<T>>,
    pool: Option<rayon::ThreadPool>,
    pub graph: TransitionGraph<T>,
    pub params: PolicyParams<T>,
    pub seed: u64,
    pub iteration: usize,
}

impl<T: Scalar> RunState<T> {
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let embedder = config.embedder.build::<T>();
        Self::with_embedder(config, seed, embedder)
    }

    pub fn with_embedder(
        config: &ExperimentConfig,
        seed: u64,
        embedder: Box<dyn EmbeddingProvider<T>>,
    ) -> Result<Self> {
        let mut layout = load_layout(&config.layout)?;
        if let Some(h) = config.horizon {
            layout.horizon = h;
        }
        let pool = if config.workers > 1 {
            let p = rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| GepoError::Config(format!("thread pool: {e}")))?;
            Some(p)
        } else {
            None
        };
        Ok(Self {
            config: config.clone(),
            layout: Arc::new(layout),
            embedder,
            pool,
            graph: TransitionGraph::new(),
            params: PolicyParams::new(NUM_ACTIONS),
            seed,
            iteration: 0,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn embedder(&self) -> &dyn EmbeddingProvider<T> {
        self.embedder.as_ref()
    }

    fn threshold(&self) -> T {
        T::of(self.config.merge_threshold)
    }

    fn resolve(&self, observation: &str) -> Result<Option<StateKey>> {
        self.graph.lookup(observation, self.embedder.as_ref(), self.threshold())
    }

    fn sample_episode(&self, rng_seed: u64) -> Result<RawEpisode<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut env = Environment::new(self.layout.clone());
        let mut obs = env.reset(rng_seed).text;
        let mut ep = RawEpisode {
            observations: vec![obs.clone()],
            actions: Vec::new(),
            rewards: Vec::new(),
            log_probs: Vec::new(),
            success: false,
        };
        while !env.is_done() {
            // unseen states read the default (uniform) logits
            let probs = match self.resolve(&obs)? {
                Some(k) => self.params.action_probabilities(k),
                None => vec![T::one() / T::from_count(NUM_ACTIONS); NUM_ACTIONS],
            };
            let weights: Vec<f64> = probs.iter().map(|p| p.as_f64()).collect();
            let dist = WeightedIndex::new(&weights)
                .map_err(|_| GepoError::NumericFailure { trajectory: 0, timestep: ep.actions.len() })?;
            let a = dist.sample(&mut rng);
            let out = env.step(a)?;
            ep.actions.push(a);
            ep.log_probs.push(probs[a].ln());
            ep.rewards.push(T::of(out.reward));
            ep.success = out.success;
            obs = out.observation.text;
            ep.observations.push(obs.clone());
        }
        Ok(ep)
    }

    /// Samples a group with the current policy and maps it onto a copy of
    /// the graph. Nothing in `self` changes.
    pub fn sample_group(&self) -> Result<(TransitionGraph<T>, Vec<Trajectory<T>>)> {
        let raw = self.sample_raw()?;
        let mut graph = self.graph.clone();
        let group = self.map_group(&raw, &mut graph)?;
        Ok((graph, group))
    }

    fn map_group(&self, raw: &[RawEpisode<T>], graph: &mut TransitionGraph<T>) -> Result<Vec<Trajectory<T>>> {
        let threshold = self.threshold();
        let mut group = Vec::with_capacity(raw.len());
        for ep in raw {
            let keys = ep
                .observations
                .iter()
                .map(|o| graph.map_state(o, self.embedder.as_ref(), threshold))
                .collect::<Result<Vec<_>>>()?;
            let steps = (0..ep.actions.len())
                .map(|t| Step {
                    observation: ep.observations[t].clone(),
                    state: keys[t],
                    action: ep.actions[t],
                    reward: ep.rewards[t],
                    old_log_prob: ep.log_probs[t],
                })
                .collect();
            group.push(Trajectory {
                steps,
                final_observation: ep.observations.last().cloned().unwrap_or_default(),
                final_state: *keys.last().expect("at least the initial observation"),
                success: ep.success,
            });
        }
        Ok(group)
    }

    fn sample_raw(&self) -> Result<Vec<RawEpisode<T>>> {
        let seeds: Vec<u64> = (0..self.config.rollouts).map(|i| rollout_seed(self.seed, self.iteration, i)).collect();
        match &self.pool {
            None => seeds.iter().map(|&s| self.sample_episode(s)).collect(),
            Some(pool) => {
                use rayon::prelude::*;
                pool.install(|| seeds.par_iter().map(|&s| self.sample_episode(s)).collect())
            }
        }
    }

    /// One greedy episode from the canonical start.
    pub fn greedy_episode(&self) -> Result<(bool, usize)> {
        let mut env = Environment::new(self.layout.clone());
        let mut obs = env.reset(0).text;
        let mut success = false;
        while !env.is_done() {
            let a = match self.resolve(&obs)? {
                Some(k) => self.params.greedy_action(k),
                None => 0,
            };
            let out = env.step(a)?;
            success = out.success;
            obs = out.observation.text;
        }
        Ok((success, env.state().steps_elapsed))
    }

    /// Greedy success rate over `episodes` evaluation episodes.
    pub fn evaluate(&self, episodes: usize) -> Result<f64> {
        if episodes == 0 {
            return Ok(0.0);
        }
        let mut wins = 0;
        for _ in 0..episodes {
            if self.greedy_episode()?.0 {
                wins += 1;
            }
        }
        Ok(wins as f64 / episodes as f64)
    }

    /// Runs one iteration. On error neither the graph nor the policy changes.
    pub fn training_iteration(&mut self) -> Result<IterationMetrics> {
        let started = Instant::now();
        let algorithm = self.config.algorithm;
        let mut timings = PhaseTimings::default();

        let clock = Instant::now();
        let raw = self.sample_raw()?;
        timings.rollout = secs(clock.elapsed());

        // graph phase works on a copy that is committed at the very end
        let clock = Instant::now();
        let mut graph = self.graph.clone();
        let group = self.map_group(&raw, &mut graph)?;
        if algorithm == Algorithm::Gepo {
            for t in &group {
                graph.record_trajectory(t)?;
            }
        }
        timings.graph_update = secs(clock.elapsed());

        let clock = Instant::now();
        let scores = if algorithm == Algorithm::Gepo {
            graph
                .maybe_refresh(
                    &self.config.refresh,
                    self.iteration,
                    self.config.metric,
                    self.config.normalize_centrality,
                )?
                .clone()
        } else {
            CentralityScores::zeros(graph.revision())
        };
        timings.centrality = secs(clock.elapsed());

        let clock = Instant::now();
        let eps = T::of(self.config.advantage.epsilon);
        let gamma = T::of(self.config.shaping.gamma_base);
        let (advantages, returns, heads) = match algorithm {
            Algorithm::Gepo => {
                let shaping = self.config.effective_shaping();
                let shaped =
                    group.iter().map(|t| shape_trajectory(t.clone(), &scores, &shaping)).collect::<Result<Vec<_>>>()?;
                let set = estimate_advantages(&shaped, &scores, &self.config.effective_advantage())?;
                let heads: Vec<T> = shaped.iter().map(|s| s.return_head()).collect();
                let returns = shaped.into_iter().map(|s| s.returns).collect();
                (set.unified, returns, heads)
            }
            Algorithm::Grpo | Algorithm::Ppo => {
                let adv = if algorithm == Algorithm::Grpo {
                    grpo_advantages(&group, gamma, eps)?
                } else {
                    ppo_advantages(&group, &self.params, gamma, eps)?
                };
                let returns: Vec<Vec<T>> = group.iter().map(|t| t.discounted_returns(gamma)).collect();
                let heads = returns.iter().map(|r| r.first().copied().unwrap_or_else(T::zero)).collect();
                (adv, returns, heads)
            }
        };
        timings.advantage = secs(clock.elapsed());

        let clock = Instant::now();
        let batch = UpdateBatch { trajectories: &group, advantages: &advantages, returns: &returns };
        let (params, report) = update_policy(&self.params, &batch, &self.config.effective_optim())?;
        timings.update = secs(clock.elapsed());

        self.graph = graph;
        self.params = params;
        let iteration = self.iteration;
        self.iteration += 1;
        timings.total = secs(started.elapsed());

        let (greedy, _) = self.greedy_episode()?;
        let n = group.len() as f64;
        let extrinsic: Vec<T> = group.iter().map(|t| t.extrinsic_return()).collect();
        Ok(IterationMetrics {
            iteration,
            success_rate: group.iter().filter(|t| t.success).count() as f64 / n,
            mean_extrinsic_return: mean(&extrinsic).as_f64(),
            mean_shaped_return: mean(&heads).as_f64(),
            mean_length: group.iter().map(|t| t.len()).sum::<usize>() as f64 / n,
            greedy_success: if greedy { 1.0 } else { 0.0 },
            nodes: self.graph.vertex_count(),
            edges: self.graph.edge_count(),
            loss: report.loss_trace.last().copied().unwrap_or_else(T::zero).as_f64(),
            surrogate: report.surrogate.as_f64(),
            value_loss: report.value_loss.as_f64(),
            entropy: report.entropy.as_f64(),
            grad_norm: report.grad_norm.as_f64(),
            timings,
        })
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}
