//! Trajectory-level, state-level and unified advantages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{GepoError, Result};
use crate::graph::{CentralityScores, StateKey};
use crate::scalar::{standardize, Scalar};
use crate::shaping::ShapedTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdvantageConfig {
    pub w_struct: f64,
    pub lambda: f64,
    pub epsilon: f64,
}

impl Default for AdvantageConfig {
    fn default() -> Self {
        Self { w_struct: 0.3, lambda: 0.5, epsilon: 1e-8 }
    }
}

impl AdvantageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w_struct >= 0.0 && (0.0..=1.0).contains(&self.lambda) && self.epsilon > 0.0 {
            Ok(())
        } else {
            Err(GepoError::Config(format!("invalid advantage config {self:?}")))
        }
    }
}

/// `Z = G'_0 + w_struct * S_graph`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryScore<T> {
    pub z: T,
    pub return_head: T,
    pub structural: T,
}

/// Visited states grouped by vertex: `key -> [(trajectory, timestep)]`.
pub type ClusterMap = BTreeMap<StateKey, Vec<(usize, usize)>>;

/// Mean node centrality over all `T + 1` visited states.
pub fn structural_score<T: Scalar>(shaped: &ShapedTrajectory<T>, scores: &CentralityScores<T>) -> T {
    let mut sum = T::zero();
    let mut count = 0usize;
    for k in shaped.base.states() {
        sum += scores.node(k);
        count += 1;
    }
    sum / T::from_count(count)
}

pub fn trajectory_score<T: Scalar>(
    shaped: &ShapedTrajectory<T>,
    scores: &CentralityScores<T>,
    cfg: &AdvantageConfig,
) -> TrajectoryScore<T> {
    let structural = structural_score(shaped, scores);
    let return_head = shaped.return_head();
    TrajectoryScore { z: return_head + T::of(cfg.w_struct) * structural, return_head, structural }
}

/// Group mean/std normalization of the trajectory scores.
pub fn trajectory_advantage<T: Scalar>(group: &[TrajectoryScore<T>], cfg: &AdvantageConfig) -> Result<Vec<T>> {
    if group.is_empty() {
        return Err(GepoError::EmptyGroup);
    }
    let z: Vec<T> = group.iter().map(|s| s.z).collect();
    Ok(standardize(&z, T::of(cfg.epsilon)))
}

/// Clusters every decision timestep of the group by its state key.
pub fn cluster_states<T: Scalar>(group: &[ShapedTrajectory<T>]) -> ClusterMap {
    let mut clusters = ClusterMap::new();
    for (i, traj) in group.iter().enumerate() {
        for (t, step) in traj.base.steps.iter().enumerate() {
            clusters.entry(step.state).or_default().push((i, t));
        }
    }
    clusters
}

/// Per-cluster z-score of the returns, scaled by `1 + C_v(key)`.
///
/// The output has the same ragged shape as `returns`; timesteps not covered
/// by any cluster stay zero.
pub fn local_advantage<T: Scalar>(
    clusters: &ClusterMap,
    returns: &[Vec<T>],
    scores: &CentralityScores<T>,
    cfg: &AdvantageConfig,
) -> Result<Vec<Vec<T>>> {
    let mut out: Vec<Vec<T>> = returns.iter().map(|r| vec![T::zero(); r.len()]).collect();
    let eps = T::of(cfg.epsilon);
    for (&key, members) in clusters {
        let mut values = Vec::with_capacity(members.len());
        for &(i, t) in members {
            let g = returns
                .get(i)
                .and_then(|r| r.get(t))
                .ok_or_else(|| GepoError::Shape(format!("no return for trajectory {i} step {t}")))?;
            values.push(*g);
        }
        let scale = T::one() + scores.node(key);
        for (&(i, t), z) in members.iter().zip(standardize(&values, eps)) {
            out[i][t] = scale * z;
        }
    }
    Ok(out)
}

/// Batch-standardizes the broadcast trajectory advantages and the local
/// advantages, then interpolates `(1 - lambda) * traj + lambda * local`.
pub fn unified_advantage<T: Scalar>(
    traj_adv: &[T],
    local_adv: &[Vec<T>],
    cfg: &AdvantageConfig,
) -> Result<Vec<Vec<T>>> {
    if traj_adv.len() != local_adv.len() {
        return Err(GepoError::Shape(format!(
            "{} trajectory advantages vs {} local rows",
            traj_adv.len(),
            local_adv.len()
        )));
    }
    let eps = T::of(cfg.epsilon);
    let broadcast: Vec<T> =
        local_adv.iter().zip(traj_adv).flat_map(|(row, &a)| std::iter::repeat_n(a, row.len())).collect();
    let flat_local: Vec<T> = local_adv.iter().flatten().copied().collect();
    let traj_n = standardize(&broadcast, eps);
    let local_n = standardize(&flat_local, eps);

    let lambda = T::of(cfg.lambda);
    let keep = T::one() - lambda;
    let mut combined = traj_n.iter().zip(&local_n).map(|(&a, &b)| keep * a + lambda * b);
    Ok(local_adv.iter().map(|row| combined.by_ref().take(row.len()).collect()).collect())
}

/// Everything the advantage stage produced for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageSet<T> {
    pub scores: Vec<TrajectoryScore<T>>,
    pub trajectory: Vec<T>,
    pub local: Vec<Vec<T>>,
    pub unified: Vec<Vec<T>>,
    pub cluster_ids: Vec<Vec<StateKey>>,
}

impl<T: Scalar> AdvantageSet<T> {
    pub fn timesteps(&self) -> usize {
        self.unified.iter().map(Vec::len).sum()
    }
}

/// Runs the whole advantage stage on one group of shaped trajectories.
pub fn estimate_advantages<T: Scalar>(
    group: &[ShapedTrajectory<T>],
    scores: &CentralityScores<T>,
    cfg: &AdvantageConfig,
) -> Result<AdvantageSet<T>> {
    if group.is_empty() {
        return Err(GepoError::EmptyGroup);
    }
    let traj_scores: Vec<_> = group.iter().map(|s| trajectory_score(s, scores, cfg)).collect();
    let trajectory = trajectory_advantage(&traj_scores, cfg)?;
    let clusters = cluster_states(group);
    let returns: Vec<Vec<T>> = group.iter().map(|s| s.returns.clone()).collect();
    let local = local_advantage(&clusters, &returns, scores, cfg)?;
    let unified = unified_advantage(&trajectory, &local, cfg)?;
    let cluster_ids = group.iter().map(|s| s.base.steps.iter().map(|st| st.state).collect()).collect();
    Ok(AdvantageSet { scores: traj_scores, trajectory, local, unified, cluster_ids })
}
