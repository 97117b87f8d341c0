//! Full pipeline runs over the checked-in five-pair fixture.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{fixture, run_all, E2e};
use serde_json::Value;
use vcc_core::corpus::FunctionRecord;
use vcc_core::detect::CandidateClone;
use vcc_core::pipeline::{self, VerdictRecord};
use vcc_core::{jsonl, Error};

fn lines(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn extract_counts_match_hand_count() {
    let e = E2e::new();
    assert_eq!(pipeline::extract(&e.pipeline()).unwrap(), 25);
    let records: Vec<FunctionRecord> = jsonl::read(&e.out("corpus.jsonl")).unwrap();
    let mut per_repo: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        *per_repo.entry(r.repo.as_str()).or_default() += 1;
    }
    let expected: BTreeMap<&str, usize> = [("acme/mediasrv", 5), ("acme/netkit", 15), ("acme/webapp", 5)].into();
    assert_eq!(per_repo, expected);
}

#[test]
fn candidates_match_golden() {
    let e = E2e::new();
    let p = e.pipeline();
    pipeline::extract(&p).unwrap();
    pipeline::embed_stage(&p).unwrap();
    let got = pipeline::detect_stage(&p).unwrap();
    let golden = lines(&std::fs::read(fixture("e2e/golden_candidates.jsonl")).unwrap());
    assert_eq!(got.len(), golden.len());
    for (c, g) in got.iter().zip(&golden) {
        assert_eq!(c.entry_id, g["entry_id"].as_str().unwrap());
        assert_eq!(c.target_id, g["target_id"].as_str().unwrap(), "{}", g["name"]);
        assert!((c.sim_vuln - g["sim_vuln"].as_f64().unwrap()).abs() < 1e-6);
        assert!((c.sim_fixed - g["sim_fixed"].as_f64().unwrap()).abs() < 1e-6);
        assert_eq!(c.kept, g["kept"].as_bool().unwrap(), "{}", g["name"]);
    }
}

#[test]
fn stage_reruns_are_byte_identical() {
    let a = E2e::new();
    let b = E2e::new();
    let truth = fixture("e2e/truth.jsonl");
    run_all(&a.pipeline(), &truth);
    let first: Vec<Vec<u8>> = ["candidates.jsonl", "verdicts.jsonl", "report.json", "report.md", "evaluation.json"]
        .iter()
        .map(|f| a.read(f))
        .collect();
    for dir in [&a, &a, &b] {
        run_all(&dir.pipeline(), &truth);
        for (i, f) in ["candidates.jsonl", "verdicts.jsonl", "report.json", "report.md", "evaluation.json"]
            .iter()
            .enumerate()
        {
            assert_eq!(dir.read(f), first[i], "{f} changed between runs");
        }
    }
    // embeddings too
    assert_eq!(a.read("embeddings.jsonl"), b.read("embeddings.jsonl"));
}

/// AP from its definition over a hand-built ranking.
fn oracle_ap(ranked: &[&str], truth: &BTreeSet<String>) -> f64 {
    let mut hits = 0.0;
    let mut sum = 0.0;
    for (i, id) in ranked.iter().enumerate() {
        if truth.contains(*id) {
            hits += 1.0;
            sum += hits / (i as f64 + 1.0);
        }
    }
    sum / truth.len() as f64
}

#[test]
fn map_matches_formula_oracle() {
    let e = E2e::new();
    let out = run_all(&e.pipeline(), &fixture("e2e/truth.jsonl"));
    let cands: Vec<CandidateClone> = jsonl::read(&e.out("candidates.jsonl")).unwrap();
    let truths: Vec<Value> = lines(&std::fs::read(fixture("e2e/truth.jsonl")).unwrap());
    let mut aps = Vec::new();
    for t in &truths {
        let q = t["query_id"].as_str().unwrap();
        let g: BTreeSet<String> = t["ground_truth"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        let mut mine: Vec<&CandidateClone> = cands.iter().filter(|c| c.entry_id == q && c.kept).collect();
        mine.sort_by(|x, y| y.sim_vuln.total_cmp(&x.sim_vuln).then(x.target_id.cmp(&y.target_id)));
        let ids: Vec<&str> = mine.iter().map(|c| c.target_id.as_str()).collect();
        aps.push(oracle_ap(&ids, &g));
    }
    let oracle_map = aps.iter().sum::<f64>() / aps.len() as f64;
    let retrieval = &out.evaluation.methods[0];
    assert_eq!(retrieval.method, "retrieval");
    assert!((retrieval.report.map - oracle_map).abs() < 1e-12);
    // hand count: APs 1, 2/3, 1, 1/3, 2/3
    assert!((oracle_map - 11.0 / 15.0).abs() < 1e-12);
    let validated = &out.evaluation.methods[1];
    assert_eq!(validated.method, "validated");
    assert!((validated.report.map - 11.0 / 15.0).abs() < 1e-12);
}

#[test]
fn report_holds_only_kept_confirmed_findings() {
    let e = E2e::new();
    let out = run_all(&e.pipeline(), &fixture("e2e/truth.jsonl"));
    let cands: Vec<CandidateClone> = jsonl::read(&e.out("candidates.jsonl")).unwrap();
    let verdicts: Vec<VerdictRecord> = jsonl::read(&e.out("verdicts.jsonl")).unwrap();
    let s = &out.report.summary;
    assert_eq!((s.entries, s.candidates, s.kept, s.validated, s.failed, s.confirmed), (5, 17, 12, 12, 0, 11));
    for entry in &out.report.entries {
        for f in &entry.findings {
            let c = cands.iter().find(|c| c.target_id == f.target_id).unwrap();
            assert!(c.kept);
            let v = verdicts.iter().find(|v| v.target_id == f.target_id).unwrap();
            assert!(v.verdict.is_vulnerable);
            assert!(!f.justification.is_empty());
        }
    }
    let golden = std::fs::read_to_string(fixture("e2e/golden_report.md")).unwrap();
    assert_eq!(String::from_utf8(e.read("report.md")).unwrap(), golden);
}

#[test]
fn report_with_no_verdicts_is_empty() {
    let e = E2e::new();
    let p = e.pipeline();
    pipeline::extract(&p).unwrap();
    pipeline::embed_stage(&p).unwrap();
    pipeline::detect_stage(&p).unwrap();
    std::fs::write(e.out("verdicts.jsonl"), "").unwrap();
    let r = pipeline::report_stage(&p).unwrap();
    assert_eq!(r.summary.confirmed, 0);
    assert_eq!(r.summary.validated, 0);
    assert!(r.entries.iter().all(|e| e.findings.is_empty()));
}

#[test]
fn replay_miss_lists_digests() {
    let e = E2e::new();
    let p = e.with_threshold(0.5);
    pipeline::extract(&p).unwrap();
    pipeline::embed_stage(&p).unwrap();
    pipeline::detect_stage(&p).unwrap();
    match pipeline::validate_stage(&p) {
        Err(Error::FixtureMiss(d)) => {
            assert!(!d.is_empty());
            assert_eq!(pipeline::missing_prompts(&p, &d).unwrap().len(), d.len());
        }
        other => panic!("expected a fixture miss, got {other:?}"),
    }
}

#[test]
fn hash_baseline_finds_verbatim_copies_only() {
    let e = E2e::new();
    let p = e.pipeline();
    pipeline::extract(&p).unwrap();
    pipeline::embed_stage(&p).unwrap();
    let matches = pipeline::baseline_stage(&p).unwrap();
    let corpus: Vec<FunctionRecord> = jsonl::read(&e.out("corpus.jsonl")).unwrap();
    let mut found: Vec<String> = matches
        .iter()
        .map(|m| {
            let r = corpus.iter().find(|r| r.id == m.target_id).unwrap();
            format!("{}:{}", r.path, r.name)
        })
        .collect();
    found.sort();
    assert_eq!(
        found,
        [
            "compat/magic_compat.c:file_check_mem",
            "src/extract.c:archive_extract_entry",
            "src/main/java/com/acme/web/GreetingServlet.java:renderGreeting",
            "src/session_manager.cpp:SessionManager::closeSession",
            "vendor/tlv_copy.c:parse_tlv",
        ]
    );
}
