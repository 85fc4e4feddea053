//! Tabular softmax policy, tabular critic, and the clipped-surrogate update
//! shared by the GEPO, GRPO and PPO paths.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GepoError, Result};
use crate::graph::StateKey;
use crate::scalar::{standardize, Scalar};
use crate::trajectory::{Step, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gepo,
    Grpo,
    Ppo,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Gepo => "gepo",
            Algorithm::Grpo => "grpo",
            Algorithm::Ppo => "ppo",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = GepoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gepo" => Ok(Self::Gepo),
            "grpo" => Ok(Self::Grpo),
            "ppo" => Ok(Self::Ppo),
            other => Err(GepoError::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// How per-step surrogate terms are pooled over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Per-trajectory sum, averaged over trajectories.
    Sum,
    /// Per-trajectory mean, averaged over trajectories.
    LengthNormalized,
}

impl FromStr for Aggregation {
    type Err = GepoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "length-normalized" => Ok(Self::LengthNormalized),
            other => Err(GepoError::Config(format!("unknown aggregation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub epochs_per_iter: usize,
    pub algorithm: Algorithm,
    /// `None` picks the algorithm's own convention: sum for GEPO and PPO,
    /// length-normalized for GRPO.
    pub aggregation: Option<Aggregation>,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            learning_rate: 0.05,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            epochs_per_iter: 1,
            algorithm: Algorithm::Gepo,
            aggregation: None,
        }
    }
}

impl OptimConfig {
    pub fn aggregation(&self) -> Aggregation {
        self.aggregation.unwrap_or(match self.algorithm {
            Algorithm::Grpo => Aggregation::LengthNormalized,
            Algorithm::Gepo | Algorithm::Ppo => Aggregation::Sum,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.clip_epsilon > 0.0
            && self.clip_epsilon < 1.0
            && self.learning_rate >= 0.0
            && self.value_coeff >= 0.0
            && self.entropy_coeff >= 0.0
            && self.epochs_per_iter >= 1;
        if ok {
            Ok(())
        } else {
            Err(GepoError::Config(format!("invalid optimizer config {self:?}")))
        }
    }
}

/// Logits and critic values keyed by state; unseen entries read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<T> {
    n_actions: usize,
    logits: BTreeMap<StateKey, Vec<T>>,
    values: BTreeMap<StateKey, T>,
}

impl<T: Scalar> PolicyParams<T> {
    pub fn new(n_actions: usize) -> Self {
        assert!(n_actions > 0, "action set must be non-empty");
        Self { n_actions, logits: BTreeMap::new(), values: BTreeMap::new() }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn logits(&self, state: StateKey) -> Vec<T> {
        self.logits.get(&state).cloned().unwrap_or_else(|| vec![T::zero(); self.n_actions])
    }

    pub fn set_logits(&mut self, state: StateKey, logits: Vec<T>) {
        assert_eq!(logits.len(), self.n_actions);
        self.logits.insert(state, logits);
    }

    pub fn value(&self, state: StateKey) -> T {
        self.values.get(&state).copied().unwrap_or_else(T::zero)
    }

    pub fn set_value(&mut self, state: StateKey, v: T) {
        self.values.insert(state, v);
    }

    /// States with explicit logits.
    pub fn states(&self) -> impl Iterator<Item = StateKey> + '_ {
        self.logits.keys().copied()
    }

    /// Max-subtracted softmax over the action set.
    pub fn action_probabilities(&self, state: StateKey) -> Vec<T> {
        match self.logits.get(&state) {
            Some(l) => softmax(l),
            None => vec![T::one() / T::from_count(self.n_actions); self.n_actions],
        }
    }

    pub fn log_prob(&self, state: StateKey, action: usize) -> T {
        log_softmax(&self.logits(state))[action]
    }

    /// Highest-probability action; ties go to the lowest index.
    pub fn greedy_action(&self, state: StateKey) -> usize {
        argmax(&self.logits(state))
    }

    pub fn entropy(&self, state: StateKey) -> T {
        entropy(&self.action_probabilities(state))
    }
}

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = logits.iter().map(|&z| (z - m).exp()).sum::<T>().ln() + m;
    logits.iter().map(|&z| z - lse).collect()
}

pub fn entropy<T: Scalar>(probs: &[T]) -> T {
    -probs.iter().filter(|&&p| p > T::zero()).map(|&p| p * p.ln()).sum::<T>()
}

pub(crate) fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// `pi_theta(a|s) / pi_old(a|s)` computed in log space.
pub fn importance_ratio<T: Scalar>(params: &PolicyParams<T>, step: &Step<T>) -> T {
    (params.log_prob(step.state, step.action) - step.old_log_prob).exp()
}

fn clip<T: Scalar>(r: T, eps: T) -> T {
    r.max(T::one() - eps).min(T::one() + eps)
}

/// `min(r * A, clip(r, 1 - eps, 1 + eps) * A)`.
pub fn clipped_term<T: Scalar>(ratio: T, advantage: T, eps: T) -> T {
    (ratio * advantage).min(clip(ratio, eps) * advantage)
}

fn trajectory_weight<T: Scalar>(aggregation: Aggregation, n_traj: usize, len: usize) -> T {
    match aggregation {
        Aggregation::Sum => T::one() / T::from_count(n_traj),
        Aggregation::LengthNormalized => T::one() / (T::from_count(n_traj) * T::from_count(len.max(1))),
    }
}

/// Clipped surrogate over ragged `[trajectory][timestep]` inputs.
pub fn surrogate_objective<T: Scalar>(
    ratios: &[Vec<T>],
    advantages: &[Vec<T>],
    clip_epsilon: T,
    aggregation: Aggregation,
) -> Result<T> {
    if ratios.len() != advantages.len() || ratios.iter().zip(advantages).any(|(r, a)| r.len() != a.len()) {
        return Err(GepoError::Shape("ratios and advantages differ in shape".into()));
    }
    let n = ratios.len();
    let mut j = T::zero();
    for (r, a) in ratios.iter().zip(advantages) {
        let w: T = trajectory_weight(aggregation, n, r.len());
        let s: T = r.iter().zip(a).map(|(&r, &a)| clipped_term(r, a, clip_epsilon)).sum();
        j += w * s;
    }
    Ok(j)
}

/// Frozen data for one policy update.
#[derive(Debug, Clone, Copy)]
pub struct UpdateBatch<'a, T> {
    pub trajectories: &'a [Trajectory<T>],
    /// Per-step advantages, same shape as the trajectories.
    pub advantages: &'a [Vec<T>],
    /// Per-step regression targets for the critic.
    pub returns: &'a [Vec<T>],
}

impl<'a, T: Scalar> UpdateBatch<'a, T> {
    fn validate(&self) -> Result<usize> {
        let n = self.trajectories.len();
        if n == 0 {
            return Err(GepoError::EmptyGroup);
        }
        if self.advantages.len() != n || self.returns.len() != n {
            return Err(GepoError::Shape("batch rows disagree".into()));
        }
        let mut steps = 0;
        for (i, t) in self.trajectories.iter().enumerate() {
            if self.advantages[i].len() != t.len() || self.returns[i].len() != t.len() {
                return Err(GepoError::Shape(format!("trajectory {i}: per-step arrays disagree")));
            }
            steps += t.len();
        }
        if steps == 0 {
            return Err(GepoError::EmptyTrajectory);
        }
        Ok(steps)
    }

    fn first_visit(&self, state: StateKey) -> (usize, usize) {
        for (i, t) in self.trajectories.iter().enumerate() {
            if let Some(ts) = t.steps.iter().position(|s| s.state == state) {
                return (i, ts);
            }
        }
        (0, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gradients<T> {
    pub logits: BTreeMap<StateKey, Vec<T>>,
    pub values: BTreeMap<StateKey, T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn norm(&self) -> T {
        let a: T = self.logits.values().flatten().map(|&g| g * g).sum();
        let b: T = self.values.values().map(|&g| g * g).sum();
        (a + b).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T> {
    pub total: T,
    pub surrogate: T,
    pub value_loss: T,
    pub entropy: T,
}

/// `-J + c1 * mean (V - G)^2 - c2 * mean H` and its exact gradient with
/// respect to every touched logit and critic entry.
pub fn composite_loss<T: Scalar>(
    params: &PolicyParams<T>,
    batch: &UpdateBatch<'_, T>,
    cfg: &OptimConfig,
) -> Result<(LossBreakdown<T>, Gradients<T>)> {
    let total_steps = batch.validate()?;
    let n = batch.trajectories.len();
    let m = T::from_count(total_steps);
    let eps = T::of(cfg.clip_epsilon);
    let c1 = T::of(cfg.value_coeff);
    let c2 = T::of(cfg.entropy_coeff);
    let aggregation = cfg.aggregation();
    let na = params.n_actions();

    let mut grads = Gradients::<T>::default();
    let mut surrogate = T::zero();
    let mut value_loss = T::zero();
    let mut ent = T::zero();

    for (i, traj) in batch.trajectories.iter().enumerate() {
        let w: T = trajectory_weight(aggregation, n, traj.len());
        for (t, step) in traj.steps.iter().enumerate() {
            let fail = || GepoError::NumericFailure { trajectory: i, timestep: t };
            if step.action >= na {
                return Err(GepoError::UnknownAction(step.action));
            }
            let logits = params.logits(step.state);
            let probs = softmax(&logits);
            let logp = log_softmax(&logits);
            let adv = batch.advantages[i][t];
            let ratio = (logp[step.action] - step.old_log_prob).exp();
            if !ratio.is_finite() || !adv.is_finite() {
                return Err(fail());
            }
            let unclipped = ratio * adv;
            let clipped = clip(ratio, eps) * adv;
            surrogate += w * unclipped.min(clipped);
            // d term / d ratio is A unless the clipped branch is strictly smaller
            let dterm = if clipped < unclipped { T::zero() } else { adv };

            let h = entropy(&probs);
            ent += h;

            let g = grads.logits.entry(step.state).or_insert_with(|| vec![T::zero(); na]);
            for b in 0..na {
                let indicator = if b == step.action { T::one() } else { T::zero() };
                // surrogate: -w * dterm * r * (1[b=a] - pi_b)
                g[b] -= w * dterm * ratio * (indicator - probs[b]);
                // entropy bonus: dH/dz_b = -pi_b (ln pi_b + H)
                if probs[b] > T::zero() {
                    g[b] += c2 / m * probs[b] * (logp[b] + h);
                }
            }

            let v = params.value(step.state);
            let target = batch.returns[i][t];
            let err = v - target;
            if !err.is_finite() {
                return Err(fail());
            }
            value_loss += err * err;
            *grads.values.entry(step.state).or_insert_with(T::zero) += c1 * T::of(2.0) * err / m;
        }
    }

    value_loss /= m;
    ent /= m;
    let total = -surrogate + c1 * value_loss - c2 * ent;
    if !total.is_finite() {
        return Err(GepoError::NumericFailure { trajectory: 0, timestep: 0 });
    }
    Ok((LossBreakdown { total, surrogate, value_loss, entropy: ent }, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport<T> {
    pub surrogate: T,
    pub value_loss: T,
    pub entropy: T,
    pub grad_norm: T,
    /// Total loss evaluated at the start of every epoch.
    pub loss_trace: Vec<T>,
}

/// Plain gradient descent on the composite loss, `epochs_per_iter` full-batch
/// passes with the old log-probabilities and advantages held fixed.
///
/// Returns fresh parameters; `params` is left untouched on error.
pub fn update_policy<T: Scalar>(
    params: &PolicyParams<T>,
    batch: &UpdateBatch<'_, T>,
    cfg: &OptimConfig,
) -> Result<(PolicyParams<T>, UpdateReport<T>)> {
    cfg.validate()?;
    let lr = T::of(cfg.learning_rate);
    let mut next = params.clone();
    let mut trace = Vec::with_capacity(cfg.epochs_per_iter);
    let mut last = None;
    for _ in 0..cfg.epochs_per_iter {
        let (loss, grads) = composite_loss(&next, batch, cfg)?;
        trace.push(loss.total);
        for (state, g) in &grads.logits {
            let mut logits = next.logits(*state);
            for (z, &d) in logits.iter_mut().zip(g) {
                *z -= lr * d;
            }
            if logits.iter().any(|z| !z.is_finite()) {
                let (trajectory, timestep) = batch.first_visit(*state);
                return Err(GepoError::NumericFailure { trajectory, timestep });
            }
            next.logits.insert(*state, logits);
        }
        for (state, &g) in &grads.values {
            let v = next.value(*state) - lr * g;
            if !v.is_finite() {
                let (trajectory, timestep) = batch.first_visit(*state);
                return Err(GepoError::NumericFailure { trajectory, timestep });
            }
            next.values.insert(*state, v);
        }
        last = Some((loss, grads.norm()));
    }
    let (loss, grad_norm) = last.expect("at least one epoch");
    Ok((
        next,
        UpdateReport {
            surrogate: loss.surrogate,
            value_loss: loss.value_loss,
            entropy: loss.entropy,
            grad_norm,
            loss_trace: trace,
        },
    ))
}

/// Broadcasts one value per trajectory to all of its steps.
pub fn broadcast<T: Scalar>(per_trajectory: &[T], group: &[Trajectory<T>]) -> Vec<Vec<T>> {
    group.iter().zip(per_trajectory).map(|(t, &a)| vec![a; t.len()]).collect()
}

/// Standardizes a ragged batch over all of its entries.
pub fn standardize_batch<T: Scalar>(rows: &[Vec<T>], eps: T) -> Vec<Vec<T>> {
    let flat: Vec<T> = rows.iter().flatten().copied().collect();
    let mut z = standardize(&flat, eps).into_iter();
    rows.iter().map(|r| z.by_ref().take(r.len()).collect()).collect()
}

/// Baseline group-relative advantages: the discounted extrinsic return of
/// each trajectory, normalized within the group, broadcast to its steps and
/// standardized over the batch.
pub fn grpo_advantages<T: Scalar>(group: &[Trajectory<T>], gamma: T, eps: T) -> Result<Vec<Vec<T>>> {
    if group.is_empty() {
        return Err(GepoError::EmptyGroup);
    }
    let heads: Vec<T> =
        group.iter().map(|t| t.discounted_returns(gamma).first().copied().unwrap_or_else(T::zero)).collect();
    let per_traj = standardize(&heads, eps);
    Ok(standardize_batch(&broadcast(&per_traj, group), eps))
}

/// PPO-style per-step advantages `G_t - V(s_t)`, standardized over the batch.
pub fn ppo_advantages<T: Scalar>(
    group: &[Trajectory<T>],
    params: &PolicyParams<T>,
    gamma: T,
    eps: T,
) -> Result<Vec<Vec<T>>> {
    if group.is_empty() {
        return Err(GepoError::EmptyGroup);
    }
    let raw: Vec<Vec<T>> = group
        .iter()
        .map(|t| {
            t.discounted_returns(gamma).into_iter().zip(&t.steps).map(|(g, s)| g - params.value(s.state)).collect()
        })
        .collect();
    Ok(standardize_batch(&raw, eps))
}
