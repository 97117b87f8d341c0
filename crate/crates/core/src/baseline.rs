//! Abstraction-hash clone detector.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FunctionRecord;
use crate::detect::VulnEntry;
use crate::metrics::RankedList;
use crate::normalize::{abstract_function, AbstractedFunction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashMatch {
    pub entry_id: String,
    pub target_id: String,
    pub digest: String,
}

fn abstract_text(id: &str, entry: &VulnEntry, text: &str) -> AbstractedFunction {
    abstract_function(&FunctionRecord {
        id: id.to_string(),
        repo: String::new(),
        path: String::new(),
        language: entry.language,
        name: String::new(),
        start_line: 1,
        end_line: 1,
        text: text.to_string(),
    })
}

/// Every (entry, target) pair whose abstraction digests collide. A target
/// that also matches the entry's fixed version is not reported. Output is
/// ordered by entry, then target order.
pub fn run_hash_baseline(entries: &[VulnEntry], targets: &[FunctionRecord]) -> Vec<HashMatch> {
    let target_digests: Vec<AbstractedFunction> = targets.par_iter().map(abstract_function).collect();
    let mut by_digest: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, a) in target_digests.iter().enumerate() {
        by_digest.entry(a.digest.as_str()).or_default().push(i);
    }
    let per_entry: Vec<Vec<HashMatch>> = entries
        .par_iter()
        .map(|e| {
            let vuln = abstract_text(&e.entry_id, e, &e.vulnerable_text);
            let fixed = abstract_text(&e.entry_id, e, &e.fixed_text);
            if vuln.digest == fixed.digest {
                return Vec::new();
            }
            by_digest
                .get(vuln.digest.as_str())
                .into_iter()
                .flatten()
                .filter(|&&i| e.origin_target_id.as_deref() != Some(targets[i].id.as_str()))
                .map(|&i| HashMatch {
                    entry_id: e.entry_id.clone(),
                    target_id: targets[i].id.clone(),
                    digest: vuln.digest.clone(),
                })
                .collect()
        })
        .collect();
    per_entry.into_iter().flatten().collect()
}

/// Groups matches into one ranked list per entry, in match order.
pub fn matches_to_ranked(matches: &[HashMatch]) -> Vec<RankedList> {
    let mut out: Vec<RankedList> = Vec::new();
    for m in matches {
        match out.iter_mut().find(|r| r.query_id == m.entry_id) {
            Some(r) => {
                if !r.results.contains(&m.target_id) {
                    r.results.push(m.target_id.clone());
                }
            }
            None => out.push(RankedList {
                query_id: m.entry_id.clone(),
                results: vec![m.target_id.clone()],
            }),
        }
    }
    out
}
