//! Ranking metrics (P@k, AP, MAP) and classification metrics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground truth for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub query_id: String,
    pub ground_truth: BTreeSet<String>,
}

/// Retrieval output for one query, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub results: Vec<String>,
}

impl RankedList {
    pub fn new(query_id: impl Into<String>, results: Vec<String>) -> Result<Self> {
        let query_id = query_id.into();
        let mut seen = HashSet::new();
        if let Some(dup) = results.iter().find(|r| !seen.insert(r.as_str())) {
            return Err(Error::Contract(format!("ranked list {query_id} repeats {dup}")));
        }
        Ok(RankedList { query_id, results })
    }

    pub fn empty(query_id: impl Into<String>) -> Self {
        RankedList {
            query_id: query_id.into(),
            results: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}

/// `|top_k ∩ G| / k`; a list shorter than `k` keeps the denominator `k`.
pub fn precision_at_k(ranked: &RankedList, truth: &EvalQuery, k: usize) -> f64 {
    assert!(k >= 1, "precision_at_k needs k >= 1");
    let hits = ranked
        .results
        .iter()
        .take(k)
        .filter(|r| truth.ground_truth.contains(*r))
        .count();
    hits as f64 / k as f64
}

pub fn average_precision(ranked: &RankedList, truth: &EvalQuery) -> Result<f64> {
    if truth.ground_truth.is_empty() {
        return Err(Error::EmptyGroundTruth(truth.query_id.clone()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, r) in ranked.results.iter().enumerate() {
        if truth.ground_truth.contains(r) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / truth.ground_truth.len() as f64)
}

pub fn mean_average_precision(queries: &[(RankedList, EvalQuery)]) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    let mut total = 0.0;
    for (ranked, truth) in queries {
        total += average_precision(ranked, truth)?;
    }
    Ok(total / queries.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn classification_metrics(tp: u64, fp: u64, fn_: u64) -> Classification {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Classification {
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub queries: usize,
    pub per_query_ap: BTreeMap<String, f64>,
    #[serde(rename = "MAP")]
    pub map: f64,
    #[serde(rename = "P_at")]
    pub p_at: BTreeMap<usize, f64>,
    pub classification: Classification,
}

pub const DEFAULT_KS: [usize; 5] = [1, 2, 3, 4, 5];

/// Scores `ranked` against every query in `truths`. Queries without a
/// ranked list count as empty retrievals (AP 0). Classification counts are
/// pooled over all queries: retrieved ∩ G are true positives.
pub fn evaluate(ranked: &[RankedList], truths: &[EvalQuery], ks: &[usize]) -> Result<MetricReport> {
    if truths.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    let by_id: HashMap<&str, &RankedList> = ranked.iter().map(|r| (r.query_id.as_str(), r)).collect();
    let pairs: Vec<(RankedList, EvalQuery)> = truths
        .iter()
        .map(|t| {
            let r = by_id
                .get(t.query_id.as_str())
                .map_or_else(|| RankedList::empty(&t.query_id), |r| (*r).clone());
            (r, t.clone())
        })
        .collect();

    let mut per_query_ap = BTreeMap::new();
    for (r, t) in &pairs {
        per_query_ap.insert(t.query_id.clone(), average_precision(r, t)?);
    }
    let map = mean_average_precision(&pairs)?;
    let p_at = ks
        .iter()
        .map(|&k| {
            let mean = pairs.iter().map(|(r, t)| precision_at_k(r, t, k)).sum::<f64>() / pairs.len() as f64;
            (k, mean)
        })
        .collect();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (r, t) in &pairs {
        let hit = r.results.iter().filter(|x| t.ground_truth.contains(*x)).count() as u64;
        tp += hit;
        fp += r.results.len() as u64 - hit;
        fn_ += t.ground_truth.len() as u64 - hit;
    }
    Ok(MetricReport {
        queries: pairs.len(),
        per_query_ap,
        map,
        p_at,
        classification: classification_metrics(tp, fp, fn_),
    })
}

/// Element-wise mean of several reports over the same queries.
pub fn average_reports(reports: &[MetricReport]) -> Option<MetricReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let per_query_ap = first
        .per_query_ap
        .keys()
        .map(|q| (q.clone(), mean(&|r| r.per_query_ap.get(q).copied().unwrap_or(0.0))))
        .collect();
    let p_at = first
        .p_at
        .keys()
        .map(|&k| (k, mean(&|r| r.p_at.get(&k).copied().unwrap_or(0.0))))
        .collect();
    let sum = |f: &dyn Fn(&Classification) -> u64| reports.iter().map(|r| f(&r.classification)).sum::<u64>();
    let count = reports.len() as u64;
    let mut classification = classification_metrics(
        sum(&|c| c.tp) / count,
        sum(&|c| c.fp) / count,
        sum(&|c| c.fn_) / count,
    );
    classification.precision = mean(&|r| r.classification.precision);
    classification.recall = mean(&|r| r.classification.recall);
    classification.f1 = mean(&|r| r.classification.f1);
    Some(MetricReport {
        queries: first.queries,
        per_query_ap,
        map: mean(&|r| r.map),
        p_at,
        classification,
    })
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// Markdown tables of ranking and classification results, one row per method.
pub fn markdown_tables(rows: &[(&str, &MetricReport)]) -> String {
    let mut out = String::new();
    let ks: Vec<usize> = rows
        .first()
        .map(|(_, r)| r.p_at.keys().copied().collect())
        .unwrap_or_default();
    out.push_str("| Method |");
    for k in &ks {
        let _ = write!(out, " P@{k} |");
    }
    out.push_str(" MAP |\n|---|");
    for _ in &ks {
        out.push_str("---:|");
    }
    out.push_str("---:|\n");
    for (name, r) in rows {
        let _ = write!(out, "| {name} |");
        for k in &ks {
            let _ = write!(out, " {} |", pct(r.p_at[k]));
        }
        let _ = writeln!(out, " {} |", pct(r.map));
    }
    out.push_str("\n| Method | TP | FP | FN | Precision | Recall | F1 |\n|---|---:|---:|---:|---:|---:|---:|\n");
    for (name, r) in rows {
        let c = &r.classification;
        let _ = writeln!(
            out,
            "| {name} | {} | {} | {} | {} | {} | {} |",
            c.tp,
            c.fp,
            c.fn_,
            pct(c.precision),
            pct(c.recall),
            pct(c.f1)
        );
    }
    out
}
