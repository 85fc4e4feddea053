//! Node and edge centralities on the transition graph.
//!
//! Self-loops are ignored everywhere here: they never lie on a shortest
//! path and do not count towards degree.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{StateKey, TransitionGraph};
use crate::error::{GepoError, Result};
use crate::scalar::Scalar;

pub const EIGENVECTOR_MAX_ITERATIONS: usize = 1000;
pub const EIGENVECTOR_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityMetric {
    Betweenness,
    Degree,
    Closeness,
    Eigenvector,
}

impl CentralityMetric {
    pub const ALL: [CentralityMetric; 4] = [
        CentralityMetric::Betweenness,
        CentralityMetric::Eigenvector,
        CentralityMetric::Closeness,
        CentralityMetric::Degree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CentralityMetric::Betweenness => "betweenness",
            CentralityMetric::Degree => "degree",
            CentralityMetric::Closeness => "closeness",
            CentralityMetric::Eigenvector => "eigenvector",
        }
    }
}

impl fmt::Display for CentralityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CentralityMetric {
    type Err = GepoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "betweenness" => Ok(Self::Betweenness),
            "degree" => Ok(Self::Degree),
            "closeness" => Ok(Self::Closeness),
            "eigenvector" => Ok(Self::Eigenvector),
            other => Err(GepoError::Config(format!("unknown centrality metric `{other}`"))),
        }
    }
}

/// Immutable centrality snapshot taken at one graph revision.
///
/// Lookups for vertices or edges that did not exist at snapshot time
/// return zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores<T> {
    node: Vec<T>,
    edge: BTreeMap<(StateKey, StateKey), T>,
    metric: CentralityMetric,
    revision: u64,
    normalized: bool,
}

impl<T: Scalar> CentralityScores<T> {
    /// Snapshot from explicit values, mainly for tests and tools.
    pub fn from_parts(
        node: Vec<T>,
        edge: BTreeMap<(StateKey, StateKey), T>,
        metric: CentralityMetric,
        revision: u64,
    ) -> Self {
        Self { node, edge, metric, revision, normalized: true }
    }

    /// All-zero snapshot; the neutral element for every shaping formula.
    pub fn zeros(revision: u64) -> Self {
        Self::from_parts(Vec::new(), BTreeMap::new(), CentralityMetric::Betweenness, revision)
    }

    pub fn node(&self, key: StateKey) -> T {
        self.node.get(key.0).copied().unwrap_or_else(T::zero)
    }

    pub fn edge(&self, from: StateKey, to: StateKey) -> T {
        self.edge.get(&(from, to)).copied().unwrap_or_else(T::zero)
    }

    pub fn node_scores(&self) -> &[T] {
        &self.node
    }

    pub fn edge_scores(&self) -> &BTreeMap<(StateKey, StateKey), T> {
        &self.edge
    }

    pub fn metric(&self) -> CentralityMetric {
        self.metric
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Number of vertices the snapshot was computed on.
    pub fn vertex_count(&self) -> usize {
        self.node.len()
    }
}

/// When to recompute centralities: every `every_k` iterations, or as soon as
/// the vertex count reaches `growth_factor` times its size at the last
/// snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefreshPolicy {
    pub every_k: usize,
    pub growth_factor: f64,
}

impl Default for RefreshPolicy {
    fn default() -> Self {
        Self { every_k: 1, growth_factor: 2.0 }
    }
}

impl RefreshPolicy {
    pub fn is_due(&self, iteration: usize, snapshot_vertices: usize, current_vertices: usize) -> bool {
        let periodic = self.every_k <= 1 || iteration.is_multiple_of(self.every_k);
        let grown = current_vertices as f64 >= self.growth_factor * snapshot_vertices as f64;
        periodic || grown
    }
}

/// Exact Brandes betweenness on an unweighted directed graph.
///
/// Returns raw (unnormalized) node scores and edge scores keyed by
/// `(src, dst)` index pairs. `adj` must not contain self-loops.
pub fn betweenness<T: Scalar>(adj: &[Vec<usize>]) -> (Vec<T>, BTreeMap<(usize, usize), T>) {
    let n = adj.len();
    let mut node = vec![T::zero(); n];
    let mut edge: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (s, nbrs) in adj.iter().enumerate() {
        for &d in nbrs {
            edge.insert((s, d), T::zero());
        }
    }

    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![T::zero(); n];
    let mut dist: Vec<i64> = vec![-1; n];
    let mut delta = vec![T::zero(); n];
    let mut queue = VecDeque::with_capacity(n);

    for s in 0..n {
        stack.clear();
        for p in preds.iter_mut() {
            p.clear();
        }
        sigma.iter_mut().for_each(|x| *x = T::zero());
        dist.iter_mut().for_each(|x| *x = -1);
        delta.iter_mut().for_each(|x| *x = T::zero());

        sigma[s] = T::one();
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] = sigma[w] + sigma[v];
                    preds[w].push(v);
                }
            }
        }

        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                let c = sigma[v] / sigma[w] * (T::one() + delta[w]);
                *edge.get_mut(&(v, w)).expect("edge seen during BFS") += c;
                delta[v] += c;
            }
            if w != s {
                node[w] += delta[w];
            }
        }
    }
    (node, edge)
}

/// Harmonic closeness using incoming distances: `sum_{u != v} 1 / d(u, v)`.
fn harmonic_closeness<T: Scalar>(adj: &[Vec<usize>]) -> Vec<T> {
    let n = adj.len();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, nbrs) in adj.iter().enumerate() {
        for &d in nbrs {
            rev[d].push(s);
        }
    }
    let mut out = vec![T::zero(); n];
    let mut dist: Vec<i64> = vec![-1; n];
    let mut queue = VecDeque::new();
    for v in 0..n {
        dist.iter_mut().for_each(|x| *x = -1);
        dist[v] = 0;
        queue.push_back(v);
        let mut acc = T::zero();
        while let Some(u) = queue.pop_front() {
            for &w in &rev[u] {
                if dist[w] < 0 {
                    dist[w] = dist[u] + 1;
                    acc += T::one() / T::of(dist[w] as f64);
                    queue.push_back(w);
                }
            }
        }
        out[v] = acc;
    }
    out
}

/// Power iteration with the `(A + I)` shift on the symmetrized adjacency,
/// scaled so the largest entry is 1.
fn eigenvector<T: Scalar>(adj: &[Vec<usize>]) -> Result<Vec<T>> {
    let n = adj.len();
    let mut sym: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, nbrs) in adj.iter().enumerate() {
        for &d in nbrs {
            sym[s].push(d);
            sym[d].push(s);
        }
    }
    let mut any_edge = false;
    for l in sym.iter_mut() {
        l.sort_unstable();
        l.dedup();
        any_edge |= !l.is_empty();
    }
    if n < 2 || !any_edge {
        return Ok(vec![T::zero(); n]);
    }

    let tol = T::of(EIGENVECTOR_TOLERANCE);
    let mut x = vec![T::one(); n];
    let mut next = vec![T::zero(); n];
    let mut residual = T::infinity();
    for _ in 0..EIGENVECTOR_MAX_ITERATIONS {
        for v in 0..n {
            next[v] = x[v] + sym[v].iter().map(|&u| x[u]).sum::<T>();
        }
        let max = next.iter().copied().fold(T::zero(), T::max);
        for y in next.iter_mut() {
            *y /= max;
        }
        residual = x.iter().zip(&next).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max);
        std::mem::swap(&mut x, &mut next);
        if residual < tol {
            return Ok(x);
        }
    }
    Err(GepoError::NonConvergence { iterations: EIGENVECTOR_MAX_ITERATIONS, residual: residual.as_f64() })
}

/// Computes node and edge centralities for the current graph revision.
///
/// With `normalize` set, betweenness is divided by `(n-1)(n-2)` (nodes) and
/// `n(n-1)` (edges), degree by `2(n-1)` and closeness by `n-1`. Eigenvector
/// scores are always scaled to a maximum of 1.
///
/// Edge scores are edge betweenness for [`CentralityMetric::Betweenness`];
/// for the other metrics an edge scores the mean of its endpoints.
pub fn compute_centralities<T: Scalar>(
    graph: &TransitionGraph<T>,
    metric: CentralityMetric,
    normalize: bool,
) -> Result<CentralityScores<T>> {
    let adj = graph.simple_adjacency();
    let n = adj.len();
    let nf = T::from_count(n);
    let one = T::one();

    let (node, mut edge): (Vec<T>, BTreeMap<(usize, usize), T>) = match metric {
        CentralityMetric::Betweenness => {
            let (mut node, mut edge) = betweenness::<T>(&adj);
            if normalize {
                let node_div = if n >= 3 { (nf - one) * (nf - one - one) } else { T::zero() };
                let edge_div = if n >= 2 { nf * (nf - one) } else { T::zero() };
                for x in node.iter_mut() {
                    *x = if node_div > T::zero() { *x / node_div } else { T::zero() };
                }
                for x in edge.values_mut() {
                    *x = if edge_div > T::zero() { *x / edge_div } else { T::zero() };
                }
            }
            (node, edge)
        }
        CentralityMetric::Degree => {
            let mut deg = vec![T::zero(); n];
            for (s, nbrs) in adj.iter().enumerate() {
                for &d in nbrs {
                    deg[s] += one;
                    deg[d] += one;
                }
            }
            if normalize {
                let div = T::of(2.0) * (nf - one);
                for x in deg.iter_mut() {
                    *x = if n >= 2 { *x / div } else { T::zero() };
                }
            }
            (deg, BTreeMap::new())
        }
        CentralityMetric::Closeness => {
            let mut c = harmonic_closeness::<T>(&adj);
            if normalize {
                for x in c.iter_mut() {
                    *x = if n >= 2 { *x / (nf - one) } else { T::zero() };
                }
            }
            (c, BTreeMap::new())
        }
        CentralityMetric::Eigenvector => (eigenvector::<T>(&adj)?, BTreeMap::new()),
    };

    if metric != CentralityMetric::Betweenness {
        let half = T::of(0.5);
        for (s, nbrs) in adj.iter().enumerate() {
            for &d in nbrs {
                edge.insert((s, d), half * (node[s] + node[d]));
            }
        }
    }
    // self-loops keep an explicit zero entry
    let mut edge: BTreeMap<(StateKey, StateKey), T> =
        edge.into_iter().map(|((s, d), v)| ((StateKey(s), StateKey(d)), v)).collect();
    for ((s, d), _) in graph.edges() {
        edge.entry((s, d)).or_insert_with(T::zero);
    }

    Ok(CentralityScores { node, edge, metric, revision: graph.revision(), normalized: normalize })
}
