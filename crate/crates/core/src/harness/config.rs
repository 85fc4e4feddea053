//! Experiment configuration, loadable from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advantage::AdvantageConfig;
use crate::error::{GepoError, Result};
use crate::graph::{CentralityMetric, EmbeddingProvider, FeatureHashEmbedder, IdentityEmbedder, RefreshPolicy};
use crate::policy::{Algorithm, OptimConfig};
use crate::scalar::Scalar;
use crate::shaping::ShapingConfig;

/// Component switches; `true` means the component is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationSwitches {
    pub intrinsic_reward: bool,
    pub aggregation: bool,
    pub dynamic_discount: bool,
}

impl Default for AblationSwitches {
    fn default() -> Self {
        Self { intrinsic_reward: true, aggregation: true, dynamic_discount: true }
    }
}

impl AblationSwitches {
    pub fn label(&self) -> String {
        let mut off = Vec::new();
        if !self.intrinsic_reward {
            off.push("reward");
        }
        if !self.aggregation {
            off.push("aggregation");
        }
        if !self.dynamic_discount {
            off.push("discount");
        }
        if off.is_empty() {
            "full".to_owned()
        } else {
            format!("w/o {}", off.join(" & "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbedderKind {
    FeatureHash { dim: usize, seed: u64 },
    Identity,
}

impl Default for EmbedderKind {
    fn default() -> Self {
        EmbedderKind::FeatureHash { dim: FeatureHashEmbedder::DEFAULT_DIM, seed: 0 }
    }
}

impl EmbedderKind {
    pub fn build<T: Scalar>(&self) -> Box<dyn EmbeddingProvider<T>> {
        match *self {
            EmbedderKind::FeatureHash { dim, seed } => Box::new(FeatureHashEmbedder::new(dim, seed)),
            EmbedderKind::Identity => Box::new(IdentityEmbedder),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Catalog name or path to a layout file.
    pub layout: String,
    pub algorithm: Algorithm,
    /// Rollouts per iteration (the group size).
    pub rollouts: usize,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    /// Overrides the layout's own horizon.
    pub horizon: Option<usize>,
    pub shaping: ShapingConfig,
    pub advantage: AdvantageConfig,
    pub optim: OptimConfig,
    pub metric: CentralityMetric,
    pub normalize_centrality: bool,
    pub refresh: RefreshPolicy,
    pub ablation: AblationSwitches,
    pub embedder: EmbedderKind,
    pub merge_threshold: f64,
    /// Greedy episodes in the final evaluation pass.
    pub eval_episodes: usize,
    /// Greedy success rate that counts as "solved" for iterations-to-threshold.
    pub success_threshold: f64,
    /// Rollout worker threads; 1 keeps runs byte-reproducible.
    pub workers: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            layout: "bottleneck".into(),
            algorithm: Algorithm::Gepo,
            rollouts: 16,
            iterations: 100,
            seeds: vec![1, 2, 3],
            horizon: None,
            shaping: ShapingConfig::default(),
            advantage: AdvantageConfig::default(),
            optim: OptimConfig::default(),
            metric: CentralityMetric::Betweenness,
            normalize_centrality: true,
            refresh: RefreshPolicy::default(),
            ablation: AblationSwitches::default(),
            embedder: EmbedderKind::default(),
            merge_threshold: 0.9,
            eval_episodes: 100,
            success_threshold: 0.8,
            workers: 1,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| GepoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GepoError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Applies the keys present in `text` on top of `self`; keys absent from
    /// the document keep their current values.
    pub fn overlay_toml(&self, text: &str) -> Result<Self> {
        let top: toml::Table = text.parse().map_err(|e: toml::de::Error| GepoError::Config(e.to_string()))?;
        let mut base: toml::Table = toml::from_str(&self.to_toml()).expect("own output parses");
        merge(&mut base, top);
        let cfg: Self =
            toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| GepoError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GepoError::Config(m.to_owned()));
        if self.rollouts == 0 {
            return bad("rollouts must be >= 1");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.horizon == Some(0) {
            return bad("horizon must be positive");
        }
        if !(self.merge_threshold > 0.0 && self.merge_threshold <= 1.0) {
            return bad("merge_threshold must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.success_threshold) {
            return bad("success_threshold must lie in [0, 1]");
        }
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        if self.refresh.growth_factor <= 1.0 {
            return bad("refresh growth_factor must exceed 1");
        }
        self.shaping.validate()?;
        self.advantage.validate()?;
        self.effective_optim().validate()
    }

    /// Optimizer settings with the experiment's algorithm applied.
    pub fn effective_optim(&self) -> OptimConfig {
        OptimConfig { algorithm: self.algorithm, ..self.optim }
    }

    /// Shaping settings with disabled components neutralized.
    pub fn effective_shaping(&self) -> ShapingConfig {
        let mut s = self.shaping;
        if !self.ablation.intrinsic_reward {
            s.w_node = 0.0;
            s.w_edge = 0.0;
        }
        if !self.ablation.dynamic_discount {
            s.w_gamma = 0.0;
        }
        s
    }

    pub fn effective_advantage(&self) -> AdvantageConfig {
        let mut a = self.advantage;
        if !self.ablation.aggregation {
            a.w_struct = 0.0;
            a.lambda = 0.0;
        }
        a
    }

    /// `# key = value` lines echoing the whole config.
    pub fn header(&self) -> String {
        self.to_toml().lines().filter(|l| !l.trim().is_empty()).map(|l| format!("# {l}\n")).collect()
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            // tagged tables are replaced whole so a variant switch drops stale fields
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
