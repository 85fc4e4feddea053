//! Persistent state-transition graph.
//!
//! Observations are merged into vertices by embedding similarity; every
//! observed transition becomes a directed edge with a traversal count.
//! Vertices and edges are never removed, so the graph only grows over a run.

mod centrality;
mod embedding;
mod export;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

pub use centrality::{
    betweenness, compute_centralities, CentralityMetric, CentralityScores, RefreshPolicy, EIGENVECTOR_MAX_ITERATIONS,
    EIGENVECTOR_TOLERANCE,
};
pub use embedding::{EmbeddingProvider, EmbeddingVector, FeatureHashEmbedder, IdentityEmbedder};
pub use export::export_graph;

use crate::error::{GepoError, Result};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Vertex identifier. Keys are dense and assigned in creation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateKey(pub usize);

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
struct Vertex<T> {
    representative: Arc<EmbeddingVector<T>>,
    visits: u64,
}

#[derive(Debug, Clone)]
pub struct TransitionGraph<T> {
    vertices: Vec<Vertex<T>>,
    /// Every observation string seen so far, including merged ones.
    text_index: HashMap<String, StateKey>,
    /// `out[src][dst] = traversals`, self-loops included.
    out: Vec<BTreeMap<usize, u64>>,
    edge_count: usize,
    revision: u64,
    snapshot: Option<CentralityScores<T>>,
    dim: Option<usize>,
}

impl<T: Scalar> Default for TransitionGraph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> TransitionGraph<T> {
    pub fn new() -> Self {
        Self {
            vertices: Vec::new(),
            text_index: HashMap::new(),
            out: Vec::new(),
            edge_count: 0,
            revision: 0,
            snapshot: None,
            dim: None,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn visits(&self, key: StateKey) -> Option<u64> {
        self.vertices.get(key.0).map(|v| v.visits)
    }

    /// Embedding of the first observation that created `key`.
    pub fn representative(&self, key: StateKey) -> Option<&EmbeddingVector<T>> {
        self.vertices.get(key.0).map(|v| v.representative.as_ref())
    }

    pub fn traversals(&self, from: StateKey, to: StateKey) -> Option<u64> {
        self.out.get(from.0).and_then(|m| m.get(&to.0).copied())
    }

    pub fn contains(&self, key: StateKey) -> bool {
        key.0 < self.vertices.len()
    }

    /// Directed edges in `(src, dst)` order with their traversal counts.
    pub fn edges(&self) -> impl Iterator<Item = ((StateKey, StateKey), u64)> + '_ {
        self.out.iter().enumerate().flat_map(|(s, m)| m.iter().map(move |(&d, &c)| ((StateKey(s), StateKey(d)), c)))
    }

    /// Out-neighbour lists with self-loops removed, for path computations.
    pub(crate) fn simple_adjacency(&self) -> Vec<Vec<usize>> {
        self.out.iter().enumerate().map(|(s, m)| m.keys().copied().filter(|&d| d != s).collect()).collect()
    }

    pub fn snapshot(&self) -> Option<&CentralityScores<T>> {
        self.snapshot.as_ref()
    }

    fn embed(&self, observation: &str, provider: &dyn EmbeddingProvider<T>) -> Result<EmbeddingVector<T>> {
        let v = EmbeddingVector::new(provider.embed(observation))?;
        if let Some(expected) = self.dim {
            if v.dim() != expected {
                return Err(GepoError::ProviderInconsistency { expected, actual: v.dim() });
            }
        }
        Ok(v)
    }

    /// Best match among existing representatives: argmax cosine, ties to the
    /// lowest key, accepted only when the similarity reaches `threshold`.
    fn best_match(&self, emb: &EmbeddingVector<T>, threshold: T) -> Option<StateKey> {
        let mut best: Option<(usize, T)> = None;
        for (i, v) in self.vertices.iter().enumerate() {
            let c = emb.cosine(&v.representative);
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        best.filter(|&(_, c)| c >= threshold).map(|(i, _)| StateKey(i))
    }

    /// Read-only resolution of an observation, used by rollout workers
    /// against an immutable snapshot. Returns `None` for states that would
    /// create a new vertex.
    pub fn lookup(
        &self,
        observation: &str,
        provider: &dyn EmbeddingProvider<T>,
        threshold: T,
    ) -> Result<Option<StateKey>> {
        if observation.is_empty() {
            return Err(GepoError::EmptyObservation);
        }
        if let Some(&k) = self.text_index.get(observation) {
            return Ok(Some(k));
        }
        if !provider.merges() {
            return Ok(None);
        }
        let emb = self.embed(observation, provider)?;
        Ok(self.best_match(&emb, threshold))
    }

    /// Maps an observation to a vertex, creating one if nothing is similar
    /// enough. A string that was seen before always resolves to the vertex it
    /// resolved to the first time.
    pub fn map_state(
        &mut self,
        observation: &str,
        provider: &dyn EmbeddingProvider<T>,
        threshold: T,
    ) -> Result<StateKey> {
        if observation.is_empty() {
            return Err(GepoError::EmptyObservation);
        }
        if !(threshold > T::zero() && threshold <= T::one()) {
            return Err(GepoError::Config(format!("merge threshold {threshold} outside (0, 1]")));
        }
        if let Some(&k) = self.text_index.get(observation) {
            self.vertices[k.0].visits += 1;
            return Ok(k);
        }
        let emb = self.embed(observation, provider)?;
        let matched = if provider.merges() { self.best_match(&emb, threshold) } else { None };
        let key = match matched {
            Some(k) => {
                self.vertices[k.0].visits += 1;
                k
            }
            None => {
                let k = StateKey(self.vertices.len());
                self.dim = Some(emb.dim());
                self.vertices.push(Vertex { representative: Arc::new(emb), visits: 1 });
                self.out.push(BTreeMap::new());
                k
            }
        };
        self.text_index.insert(observation.to_owned(), key);
        Ok(key)
    }

    /// Adds every transition of `trajectory` as an edge (or bumps its count)
    /// and advances the revision once.
    pub fn record_trajectory(&mut self, trajectory: &Trajectory<T>) -> Result<()> {
        if trajectory.is_empty() {
            return Err(GepoError::EmptyTrajectory);
        }
        if let Some(bad) = trajectory.states().find(|&k| !self.contains(k)) {
            return Err(GepoError::UnknownState(bad));
        }
        for (a, b) in trajectory.transitions() {
            let slot = self.out[a.0].entry(b.0).or_insert(0);
            if *slot == 0 {
                self.edge_count += 1;
            }
            *slot += 1;
        }
        self.revision += 1;
        Ok(())
    }

    /// Recomputes the cached centralities when the schedule asks for it and
    /// returns the (possibly unchanged) snapshot.
    pub fn maybe_refresh(
        &mut self,
        policy: &RefreshPolicy,
        iteration: usize,
        metric: CentralityMetric,
        normalize: bool,
    ) -> Result<&CentralityScores<T>> {
        let due = match &self.snapshot {
            None => true,
            Some(s) => {
                s.metric() != metric
                    || s.is_normalized() != normalize
                    || policy.is_due(iteration, s.vertex_count(), self.vertex_count())
            }
        };
        if due {
            self.snapshot = Some(compute_centralities(self, metric, normalize)?);
        }
        Ok(self.snapshot.as_ref().expect("snapshot set above"))
    }

    pub fn set_snapshot(&mut self, scores: CentralityScores<T>) {
        self.snapshot = Some(scores);
    }
}
