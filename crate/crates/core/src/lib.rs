//! Graph-enhanced policy optimization for sparse-reward navigation tasks.
//!
//! Observations are merged into a persistent state-transition graph whose
//! centralities drive reward shaping, per-step discounting and a two-level
//! advantage estimate for a clipped policy-gradient update. Every numeric
//! routine is generic over [`Scalar`]; the aliases below fix it to `f64`
//! (and `f32` with the `32` suffix).

pub mod advantage;
pub mod env;
pub mod error;
pub mod graph;
pub mod harness;
pub mod policy;
pub mod scalar;
pub mod shaping;
pub mod trajectory;

pub use advantage::{estimate_advantages, AdvantageConfig, AdvantageSet};
pub use env::{Environment, Layout, ACTIONS, NUM_ACTIONS};
pub use error::{GepoError, Result};
pub use graph::{CentralityMetric, EmbeddingProvider, RefreshPolicy, StateKey};
pub use harness::{ExperimentConfig, IterationMetrics};
pub use policy::{Aggregation, Algorithm, OptimConfig};
pub use scalar::Scalar;
pub use shaping::ShapingConfig;

pub type Graph = graph::TransitionGraph<f64>;
pub type Graph32 = graph::TransitionGraph<f32>;
pub type Scores = graph::CentralityScores<f64>;
pub type Scores32 = graph::CentralityScores<f32>;
pub type Policy = policy::PolicyParams<f64>;
pub type Policy32 = policy::PolicyParams<f32>;
pub type Traj = trajectory::Trajectory<f64>;
pub type Traj32 = trajectory::Trajectory<f32>;
pub type Shaped = shaping::ShapedTrajectory<f64>;
pub type Shaped32 = shaping::ShapedTrajectory<f32>;
pub type Run = harness::RunState<f64>;
pub type Run32 = harness::RunState<f32>;
