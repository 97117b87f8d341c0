//! Exhaustive inner-product search over unit-norm vectors.
//!
//! Results are always identical to a naive scan: every entry is scored, and
//! ordering is by descending score with insertion order breaking ties.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;

use crate::embed::{self, EmbeddingVector};
use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-6;
const PAR_THRESHOLD: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub source_id: String,
    pub position: usize,
    pub score: f64,
}

/// Immutable after [`VectorIndex::build`]; safe to query from many threads.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    ids: Vec<String>,
    data: Vec<f32>,
    dimension: usize,
}

impl VectorIndex {
    pub fn build(vectors: &[EmbeddingVector]) -> Result<Self> {
        let first = vectors.first().ok_or(Error::EmptyInput("no vectors to index"))?;
        let dimension = first.dim();
        let mut seen = HashSet::with_capacity(vectors.len());
        let mut data = Vec::with_capacity(vectors.len() * dimension);
        for v in vectors {
            if v.dim() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: v.dim(),
                });
            }
            if !seen.insert(v.source_id.as_str()) {
                return Err(Error::DuplicateId(v.source_id.clone()));
            }
            let norm = embed::l2_norm(&v.values);
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::Contract(format!(
                    "vector {} has norm {norm}, expected unit norm",
                    v.source_id
                )));
            }
            data.extend_from_slice(&v.values);
        }
        Ok(VectorIndex {
            ids: vectors.iter().map(|v| v.source_id.clone()).collect(),
            data,
            dimension,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn id(&self, position: usize) -> &str {
        &self.ids[position]
    }

    pub fn vector(&self, position: usize) -> &[f32] {
        &self.data[position * self.dimension..(position + 1) * self.dimension]
    }

    fn check_query(&self, q: &[f32]) -> Result<()> {
        if q.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: q.len(),
            });
        }
        Ok(())
    }

    fn scores(&self, q: &[f32]) -> Vec<f64> {
        if self.len() >= PAR_THRESHOLD {
            self.data
                .par_chunks(self.dimension)
                .map(|row| embed::dot(row, q))
                .collect()
        } else {
            self.data
                .chunks(self.dimension)
                .map(|row| embed::dot(row, q))
                .collect()
        }
    }

    fn hit(&self, position: usize, score: f64) -> Hit {
        Hit {
            source_id: self.ids[position].clone(),
            position,
            score,
        }
    }

    /// Every entry scoring at least `threshold` against `q`.
    pub fn query_threshold(&self, q: &[f32], threshold: f64) -> Result<Vec<Hit>> {
        self.check_query(q)?;
        let mut hits: Vec<(usize, f64)> = self
            .scores(q)
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| s >= threshold)
            .collect();
        hits.sort_by(rank_order);
        Ok(hits.into_iter().map(|(p, s)| self.hit(p, s)).collect())
    }

    /// The `k` best entries (all of them when the index is smaller).
    pub fn query_topk(&self, q: &[f32], k: usize) -> Result<Vec<Hit>> {
        self.check_query(q)?;
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let mut hits: Vec<(usize, f64)> = self.scores(q).into_iter().enumerate().collect();
        if k < hits.len() {
            hits.select_nth_unstable_by(k - 1, rank_order);
            hits.truncate(k);
        }
        hits.sort_by(rank_order);
        Ok(hits.into_iter().map(|(p, s)| self.hit(p, s)).collect())
    }
}

fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}
