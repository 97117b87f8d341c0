//! Unit-norm embeddings of preprocessed function text.
//!
//! Two providers sit behind [`embed_batch`]: a remote JSON-over-HTTP model
//! and a local hashed character-trigram encoder that needs no network or
//! weights. Every vector that leaves this module is L2-normalized.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::http::{self, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub source_id: String,
    pub values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Line format of the embedding store.
#[derive(Debug, Serialize, Deserialize)]
pub struct StoredVector {
    pub source_id: String,
    pub dim: usize,
    pub values: Vec<f32>,
}

impl From<&EmbeddingVector> for StoredVector {
    fn from(v: &EmbeddingVector) -> Self {
        StoredVector {
            source_id: v.source_id.clone(),
            dim: v.values.len(),
            values: v.values.clone(),
        }
    }
}

impl TryFrom<StoredVector> for EmbeddingVector {
    type Error = Error;

    fn try_from(s: StoredVector) -> Result<Self> {
        if s.values.len() != s.dim {
            return Err(Error::DimensionMismatch {
                expected: s.dim,
                actual: s.values.len(),
            });
        }
        Ok(EmbeddingVector {
            source_id: s.source_id,
            values: s.values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EmbedProviderKind {
    Remote,
    LocalDeterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedProviderConfig {
    pub kind: EmbedProviderKind,
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub dimension: usize,
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for EmbedProviderConfig {
    fn default() -> Self {
        EmbedProviderConfig {
            kind: EmbedProviderKind::LocalDeterministic,
            endpoint_url: String::new(),
            model_name: String::new(),
            api_key_env: "EMBED_API_KEY".into(),
            dimension: 512,
            batch_size: 32,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
        }
    }
}

impl EmbedProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension < 8 {
            return Err(Error::InvalidConfig("embed.dimension must be at least 8".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("embed.batch_size must be positive".into()));
        }
        if self.kind == EmbedProviderKind::Remote
            && (self.endpoint_url.is_empty() || self.model_name.is_empty())
        {
            return Err(Error::InvalidConfig(
                "remote embedding needs endpoint_url and model_name".into(),
            ));
        }
        Ok(())
    }

    /// Identifies the provider in run manifests.
    pub fn fingerprint(&self) -> String {
        match self.kind {
            EmbedProviderKind::LocalDeterministic => {
                format!("local-trigram-fnv1a64/d{}", self.dimension)
            }
            EmbedProviderKind::Remote => format!("remote/{}@{}", self.model_name, self.endpoint_url),
        }
    }
}

/// Embeds `(source_id, preprocessed_text)` items, preserving order.
pub fn embed_batch(config: &EmbedProviderConfig, items: &[(String, String)]) -> Result<Vec<EmbeddingVector>> {
    config.validate()?;
    if items.is_empty() {
        return Err(Error::EmptyInput("no texts to embed"));
    }
    if let Some((id, _)) = items.iter().find(|(_, t)| t.trim().is_empty()) {
        log::error!("function {id} has no text to embed");
        return Err(Error::EmptyText);
    }
    let raw = match config.kind {
        EmbedProviderKind::LocalDeterministic => items
            .iter()
            .map(|(_, t)| trigram_vector(t, config.dimension))
            .collect::<Result<Vec<_>>>()?,
        EmbedProviderKind::Remote => embed_remote(config, items)?,
    };
    items
        .iter()
        .zip(raw)
        .map(|((id, _), values)| {
            Ok(EmbeddingVector {
                source_id: id.clone(),
                values: l2_normalize(&values)?,
            })
        })
        .collect()
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Term-frequency vector of character trigrams hashed into `dim` buckets.
/// Texts shorter than three characters count as a single gram.
pub fn trigram_vector(text: &str, dim: usize) -> Result<Vec<f32>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyText);
    }
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let mut counts = vec![0u32; dim];
    let chars = bounds.len() - 1;
    if chars < 3 {
        counts[(fnv1a64(text.as_bytes()) % dim as u64) as usize] += 1;
    } else {
        for w in 0..=chars - 3 {
            let gram = &text[bounds[w]..bounds[w + 3]];
            counts[(fnv1a64(gram.as_bytes()) % dim as u64) as usize] += 1;
        }
    }
    Ok(counts.into_iter().map(|c| c as f32).collect())
}

pub fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

pub fn l2_normalize(v: &[f32]) -> Result<Vec<f32>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("embedding has non-finite entries".into()));
    }
    let norm = l2_norm(v);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(v.iter().map(|&x| (x as f64 / norm) as f32).collect())
}

/// Inner product of two unit vectors, clamped to [-1, 1].
pub fn cosine(u: &[f32], v: &[f32]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    dot(u, v).clamp(-1.0, 1.0)
}

#[inline]
pub(crate) fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

fn embed_remote(config: &EmbedProviderConfig, items: &[(String, String)]) -> Result<Vec<Vec<f32>>> {
    let key = http::api_key(&config.api_key_env)?;
    let batches: Vec<&[(String, String)]> = items.chunks(config.batch_size).collect();
    let results = http::bounded_map(batches.len(), config.max_in_flight, |i| {
        let inputs: Vec<&str> = batches[i].iter().map(|(_, t)| t.as_str()).collect();
        let body = json!({ "model": config.model_name, "inputs": inputs });
        let resp = http::post_json(&config.endpoint_url, &key, &body, config.retry)?;
        let parsed: RemoteEmbedResponse = serde_json::from_value(resp)
            .map_err(|e| Error::ProviderUnavailable(format!("unexpected response shape: {e}")))?;
        if parsed.vectors.len() != inputs.len() {
            return Err(Error::Contract(format!(
                "provider returned {} vectors for {} inputs",
                parsed.vectors.len(),
                inputs.len()
            )));
        }
        Ok(parsed.vectors)
    });
    let mut out = Vec::with_capacity(items.len());
    for r in results {
        out.extend(r?);
    }
    if let Some(bad) = out.iter().find(|v| v.len() != config.dimension) {
        return Err(Error::DimensionMismatch {
            expected: config.dimension,
            actual: bad.len(),
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RemoteEmbedResponse {
    vectors: Vec<Vec<f32>>,
}
