//! Text-to-vector providers used to merge equivalent observations.

use crate::error::{GepoError, Result};
use crate::scalar::Scalar;

/// Fixed-length real vector with a cached Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector<T> {
    values: Vec<T>,
    norm: T,
}

impl<T: Scalar> EmbeddingVector<T> {
    /// Rejects zero-norm and non-finite vectors.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(GepoError::InvalidEmbedding("empty vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GepoError::InvalidEmbedding("non-finite component".into()));
        }
        let norm = values.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(GepoError::InvalidEmbedding("zero norm".into()));
        }
        Ok(Self { values, norm })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> T {
        self.norm
    }

    pub fn cosine(&self, other: &Self) -> T {
        let dot: T = self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).sum();
        dot / (self.norm * other.norm)
    }
}

/// Maps an observation string to a raw embedding.
///
/// Providers must be deterministic and always return vectors of the same
/// length. Validation happens in the graph, not here.
pub trait EmbeddingProvider<T>: Send + Sync {
    fn embed(&self, text: &str) -> Vec<T>;

    /// `false` disables similarity merging: only byte-identical observations
    /// share a vertex.
    fn merges(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str;
}

/// Signed feature hashing of whitespace tokens.
#[derive(Debug, Clone)]
pub struct FeatureHashEmbedder {
    dim: usize,
    seed: u64,
}

impl FeatureHashEmbedder {
    pub const DEFAULT_DIM: usize = 1024;

    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, seed }
    }

    fn hash(&self, token: &str) -> u64 {
        // FNV-1a, seeded through the offset basis.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for b in token.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        // final avalanche so low bits depend on the whole token
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
        h
    }
}

impl Default for FeatureHashEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM, 0)
    }
}

impl<T: Scalar> EmbeddingProvider<T> for FeatureHashEmbedder {
    fn embed(&self, text: &str) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for token in text.split_whitespace() {
            let h = self.hash(token);
            let idx = (h % self.dim as u64) as usize;
            if h >> 63 == 0 {
                v[idx] += T::one();
            } else {
                v[idx] -= T::one();
            }
        }
        v
    }

    fn name(&self) -> &'static str {
        "feature-hash"
    }
}

/// Every distinct string is its own vertex.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityEmbedder;

impl<T: Scalar> EmbeddingProvider<T> for IdentityEmbedder {
    fn embed(&self, _text: &str) -> Vec<T> {
        vec![T::one()]
    }

    fn merges(&self) -> bool {
        false
    }

    fn name(&self) -> &'static str {
        "identity"
    }
}
