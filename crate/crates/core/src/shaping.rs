//! Centrality-driven reward and discount shaping.

use serde::{Deserialize, Serialize};

use crate::error::{GepoError, Result};
use crate::graph::{CentralityScores, StateKey};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapingConfig {
    pub w_node: f64,
    pub w_edge: f64,
    pub gamma_base: f64,
    pub w_gamma: f64,
    pub gamma_cap: f64,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self { w_node: 0.1, w_edge: 0.1, gamma_base: 0.99, w_gamma: 0.1, gamma_cap: 0.999 }
    }
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.w_node >= 0.0
            && self.w_edge >= 0.0
            && self.w_gamma >= 0.0
            && self.gamma_base >= 0.0
            && self.gamma_base < self.gamma_cap
            && self.gamma_cap <= 0.999;
        if ok {
            Ok(())
        } else {
            Err(GepoError::Config(format!("invalid shaping config {self:?}")))
        }
    }
}

/// `w_node * C_v(to) + w_edge * C_e(from, to)`.
pub fn intrinsic_reward<T: Scalar>(
    scores: &CentralityScores<T>,
    from: StateKey,
    to: StateKey,
    cfg: &ShapingConfig,
) -> T {
    T::of(cfg.w_node) * scores.node(to) + T::of(cfg.w_edge) * scores.edge(from, to)
}

/// `clip(gamma_base * (1 + w_gamma * tanh(C_v(to) - C_v(from))), 0, gamma_cap)`.
pub fn dynamic_discount<T: Scalar>(
    scores: &CentralityScores<T>,
    from: StateKey,
    to: StateKey,
    cfg: &ShapingConfig,
) -> T {
    let delta = scores.node(to) - scores.node(from);
    let g = T::of(cfg.gamma_base) * (T::one() + T::of(cfg.w_gamma) * delta.tanh());
    // NaN falls through to the lower bound
    if g > T::of(cfg.gamma_cap) {
        T::of(cfg.gamma_cap)
    } else if g >= T::zero() {
        g
    } else {
        T::zero()
    }
}

pub fn intrinsic_rewards<T: Scalar>(
    trajectory: &Trajectory<T>,
    scores: &CentralityScores<T>,
    cfg: &ShapingConfig,
) -> Vec<T> {
    trajectory.transitions().map(|(a, b)| intrinsic_reward(scores, a, b, cfg)).collect()
}

/// `r'_t = r_t + r_intr,t` for every step.
pub fn shape_rewards<T: Scalar>(
    trajectory: &Trajectory<T>,
    scores: &CentralityScores<T>,
    cfg: &ShapingConfig,
) -> Vec<T> {
    trajectory.steps.iter().zip(intrinsic_rewards(trajectory, scores, cfg)).map(|(s, r)| s.reward + r).collect()
}

pub fn discounts<T: Scalar>(trajectory: &Trajectory<T>, scores: &CentralityScores<T>, cfg: &ShapingConfig) -> Vec<T> {
    trajectory.transitions().map(|(a, b)| dynamic_discount(scores, a, b, cfg)).collect()
}

/// Backward recursion `G_t = r_t + gamma_t * G_{t+1}` with `G_T = 0`.
/// The discount of the final step is never used.
pub fn compute_returns<T: Scalar>(rewards: &[T], discounts: &[T]) -> Result<Vec<T>> {
    if rewards.len() != discounts.len() {
        return Err(GepoError::Shape(format!("{} rewards vs {} discounts", rewards.len(), discounts.len())));
    }
    let mut out = vec![T::zero(); rewards.len()];
    let mut next = T::zero();
    for t in (0..rewards.len()).rev() {
        next = rewards[t] + discounts[t] * next;
        out[t] = next;
    }
    Ok(out)
}

/// A trajectory with its per-step shaping signals attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapedTrajectory<T> {
    pub base: Trajectory<T>,
    pub intrinsic_rewards: Vec<T>,
    pub shaped_rewards: Vec<T>,
    pub discounts: Vec<T>,
    pub returns: Vec<T>,
}

impl<T: Scalar> ShapedTrajectory<T> {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// `G'_0`, or zero for an empty trajectory.
    pub fn return_head(&self) -> T {
        self.returns.first().copied().unwrap_or_else(T::zero)
    }
}

pub fn shape_trajectory<T: Scalar>(
    trajectory: Trajectory<T>,
    scores: &CentralityScores<T>,
    cfg: &ShapingConfig,
) -> Result<ShapedTrajectory<T>> {
    let intrinsic = intrinsic_rewards(&trajectory, scores, cfg);
    let shaped: Vec<T> = trajectory.steps.iter().zip(&intrinsic).map(|(s, &r)| s.reward + r).collect();
    let gammas = discounts(&trajectory, scores, cfg);
    let returns = compute_returns(&shaped, &gammas)?;
    Ok(ShapedTrajectory {
        base: trajectory,
        intrinsic_rewards: intrinsic,
        shaped_rewards: shaped,
        discounts: gammas,
        returns,
    })
}
