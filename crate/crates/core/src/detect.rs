//! Candidate retrieval for known vulnerable functions, the vulnerable-vs-
//! fixed comparative filter, and per-query ranking.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{FunctionPair, Language};
use crate::embed::{self, EmbeddingVector};
use crate::error::{Error, Result};
use crate::index::VectorIndex;
use crate::metrics::RankedList;
use crate::validate::ValidationVerdict;

pub const BENCHMARK_THRESHOLD: f64 = 0.7;
pub const REALWORLD_THRESHOLD: f64 = 0.85;

/// A known vulnerable function with its patched version, both embedded.
#[derive(Debug, Clone, PartialEq)]
pub struct VulnEntry {
    pub entry_id: String,
    pub cve_id: String,
    pub cwe_id: String,
    pub language: Language,
    pub vulnerable_text: String,
    pub fixed_text: String,
    pub vulnerable_vec: EmbeddingVector,
    pub fixed_vec: EmbeddingVector,
    /// Target id of the vulnerable function itself when it is part of the
    /// scanned corpus; never reported as its own clone.
    pub origin_target_id: Option<String>,
}

impl VulnEntry {
    /// Entry id is the pair id. `vulnerable_vec` and `fixed_vec` must embed
    /// the preprocessed vulnerable and fixed texts of `pair`.
    pub fn from_pair(pair: &FunctionPair, vulnerable_vec: EmbeddingVector, fixed_vec: EmbeddingVector) -> Self {
        VulnEntry {
            entry_id: pair.pair_id().to_string(),
            cve_id: pair.cve_id.clone(),
            cwe_id: pair.cwe_id.clone(),
            language: pair.vulnerable.language,
            vulnerable_text: pair.vulnerable.text.clone(),
            fixed_text: pair.fixed.text.clone(),
            vulnerable_vec,
            fixed_vec,
            origin_target_id: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.vulnerable_vec.dim() != self.fixed_vec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.vulnerable_vec.dim(),
                actual: self.fixed_vec.dim(),
            });
        }
        if self.vulnerable_text == self.fixed_text {
            return Err(Error::Contract(format!(
                "entry {} has identical vulnerable and fixed text",
                self.entry_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateClone {
    pub entry_id: String,
    pub target_id: String,
    pub sim_vuln: f64,
    pub sim_fixed: f64,
    pub kept: bool,
    pub rank_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub threshold_t: f64,
    pub max_candidates_per_query: Option<usize>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            threshold_t: BENCHMARK_THRESHOLD,
            max_candidates_per_query: None,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_t > 0.0 && self.threshold_t <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold_t must be in (0, 1], got {}",
                self.threshold_t
            )));
        }
        if self.max_candidates_per_query == Some(0) {
            return Err(Error::InvalidConfig("max_candidates_per_query must be positive".into()));
        }
        Ok(())
    }
}

/// Queries the target index with every entry's vulnerable vector, then
/// gives each retrieved target to the single entry it is most similar to
/// (ties go to the earlier entry). `kept` stays false until
/// [`filter_against_fixed`] runs.
pub fn retrieve_candidates(
    entries: &[VulnEntry],
    targets: &VectorIndex,
    config: &DetectConfig,
) -> Result<Vec<CandidateClone>> {
    config.validate()?;
    for e in entries {
        e.check()?;
        if e.vulnerable_vec.dim() != targets.dimension() {
            return Err(Error::DimensionMismatch {
                expected: targets.dimension(),
                actual: e.vulnerable_vec.dim(),
            });
        }
    }
    let per_entry: Vec<Vec<(usize, f64)>> = entries
        .par_iter()
        .map(|e| {
            let hits = targets.query_threshold(&e.vulnerable_vec.values, config.threshold_t)?;
            Ok(hits
                .into_iter()
                .filter(|h| e.origin_target_id.as_deref() != Some(h.source_id.as_str()))
                .map(|h| (h.position, h.score))
                .collect())
        })
        .collect::<Result<_>>()?;

    // sequential reduction keeps the assignment independent of scheduling
    let mut best: HashMap<usize, (usize, f64)> = HashMap::new();
    for (ei, hits) in per_entry.iter().enumerate() {
        for &(pos, score) in hits {
            match best.get(&pos) {
                Some(&(_, s)) if s >= score => {}
                _ => {
                    best.insert(pos, (ei, score));
                }
            }
        }
    }

    let mut out = Vec::new();
    for (ei, hits) in per_entry.iter().enumerate() {
        let entry = &entries[ei];
        let assigned = hits
            .iter()
            .filter(|(pos, _)| best.get(pos).is_some_and(|&(owner, _)| owner == ei));
        let limit = config.max_candidates_per_query.unwrap_or(usize::MAX);
        for &(pos, score) in assigned.take(limit) {
            let sim_vuln = score.clamp(-1.0, 1.0);
            out.push(CandidateClone {
                entry_id: entry.entry_id.clone(),
                target_id: targets.id(pos).to_string(),
                sim_vuln,
                sim_fixed: embed::cosine(targets.vector(pos), &entry.fixed_vec.values),
                kept: false,
                rank_score: sim_vuln,
            });
        }
    }
    Ok(out)
}

/// Marks candidates closer to the patched version as discarded. Ties are
/// kept. Discarded candidates stay in the output for auditing.
pub fn filter_against_fixed(candidates: Vec<CandidateClone>) -> Vec<CandidateClone> {
    candidates
        .into_iter()
        .map(|mut c| {
            c.kept = c.sim_fixed <= c.sim_vuln;
            c
        })
        .collect()
}

/// Sort key used to order candidates within one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingKey {
    /// Similarity only; validation verdicts are ignored.
    Similarity,
    /// Confirmed candidates only, by confidence then similarity.
    #[default]
    ConfidenceThenSimilarity,
    /// Confirmed candidates only, by similarity.
    ValidatedSimilarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidates {
    pub entry_id: String,
    pub candidates: Vec<CandidateClone>,
}

impl RankedCandidates {
    pub fn to_ranked_list(&self) -> RankedList {
        RankedList {
            query_id: self.entry_id.clone(),
            results: self.candidates.iter().map(|c| c.target_id.clone()).collect(),
        }
    }
}

/// Orders kept candidates per entry. Without verdicts the order is by
/// similarity (ties by target id). With verdicts, candidates the validator
/// did not confirm are dropped and the rest ordered by
/// (is_vulnerable, confidence, similarity), all descending.
pub fn rank_candidates(
    candidates: &[CandidateClone],
    verdicts: Option<&HashMap<String, ValidationVerdict>>,
) -> Vec<RankedCandidates> {
    match verdicts {
        None => rank_by(candidates, None, RankingKey::Similarity),
        Some(v) => rank_by(candidates, Some(v), RankingKey::ConfidenceThenSimilarity),
    }
}

pub fn rank_by(
    candidates: &[CandidateClone],
    verdicts: Option<&HashMap<String, ValidationVerdict>>,
    key: RankingKey,
) -> Vec<RankedCandidates> {
    let use_verdicts = key != RankingKey::Similarity;
    let empty = HashMap::new();
    let verdicts = verdicts.unwrap_or(&empty);
    let mut groups: BTreeMap<&str, Vec<(CandidateClone, Option<&ValidationVerdict>)>> = BTreeMap::new();
    for c in candidates.iter().filter(|c| c.kept) {
        let verdict = verdicts.get(&c.target_id);
        if use_verdicts && !verdict.is_some_and(|v| v.confirms()) {
            continue;
        }
        groups.entry(&c.entry_id).or_default().push((c.clone(), verdict));
    }
    groups
        .into_iter()
        .map(|(entry_id, mut items)| {
            items.sort_by(|a, b| compare(a, b, key));
            RankedCandidates {
                entry_id: entry_id.to_string(),
                candidates: items
                    .into_iter()
                    .map(|(mut c, v)| {
                        c.rank_score = match key {
                            RankingKey::ConfidenceThenSimilarity => {
                                v.map_or(0.0, |v| f64::from(v.confidence_level))
                            }
                            _ => c.sim_vuln,
                        };
                        c
                    })
                    .collect(),
            }
        })
        .collect()
}

fn compare(
    a: &(CandidateClone, Option<&ValidationVerdict>),
    b: &(CandidateClone, Option<&ValidationVerdict>),
    key: RankingKey,
) -> Ordering {
    let by_sim = b.0.sim_vuln.total_cmp(&a.0.sim_vuln);
    let by_id = a.0.target_id.cmp(&b.0.target_id);
    match key {
        RankingKey::Similarity | RankingKey::ValidatedSimilarity => by_sim.then(by_id),
        RankingKey::ConfidenceThenSimilarity => {
            let vuln = |x: &(CandidateClone, Option<&ValidationVerdict>)| x.1.is_some_and(|v| v.is_vulnerable);
            let conf = |x: &(CandidateClone, Option<&ValidationVerdict>)| x.1.map_or(0, |v| v.confidence_level);
            vuln(b)
                .cmp(&vuln(a))
                .then(conf(b).cmp(&conf(a)))
                .then(by_sim)
                .then(by_id)
        }
    }
}
