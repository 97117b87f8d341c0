//! Benchmark generation over the ten-pair fixture with a replayed generator.

mod common;

use std::collections::BTreeMap;
use std::fs;

use common::{fixture, BenchFixture};
use vcc_core::bench::{self, CloneRecord, CloneType, OriginSide};
use vcc_core::metrics::EvalQuery;
use vcc_core::{jsonl, FunctionPair, Language};

fn archive_files(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    walk(dir, dir)
}

fn walk(root: &std::path::Path, dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            out.extend(walk(root, &path));
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.insert(rel, fs::read(&path).unwrap());
        }
    }
    out
}

#[test]
fn same_seed_gives_identical_archive() {
    let f = BenchFixture::new();
    let (_, a) = f.generate("a");
    let (_, b) = f.generate("b");
    let fa = archive_files(&a);
    assert!(fa.contains_key("clones.jsonl") && fa.contains_key("manifest.json") && fa.contains_key("stats.json"));
    assert_eq!(fa, archive_files(&b));
}

#[test]
fn other_seed_changes_type1_clones() {
    let f = BenchFixture::new();
    let (a, _) = f.generate("a");
    let mut p = f.pipeline();
    p.config.seed = 8;
    let b = vcc_core::pipeline::bench_gen(
        &p,
        &vcc_core::pipeline::BenchGenArgs {
            pool: f.pool(),
            out_dir: f.dir.path().join("b"),
        },
    );
    // T2..T4 prompts carry the seed, so the replay fixture has no answers
    assert!(matches!(b, Err(vcc_core::Error::FixtureMiss(_))));
    let t1: Vec<&CloneRecord> = a.clones.iter().filter(|c| c.clone_type == CloneType::T1).collect();
    let pairs: Vec<FunctionPair> = jsonl::read(&f.pool()).unwrap();
    let other = bench::gen_type1(&pairs[0].vulnerable.text, Language::C, 8).unwrap();
    assert_ne!(t1[0].text, other);
}

#[test]
fn two_pair_pool_gives_twenty_clones() {
    let f = BenchFixture::new();
    let pairs: Vec<FunctionPair> = jsonl::read(&f.pool()).unwrap();
    let small = f.dir.path().join("two.jsonl");
    jsonl::write(&small, &pairs[..2]).unwrap();
    let mut p = f.pipeline();
    p.config.bench.target_pairs = 2;
    let built = vcc_core::pipeline::bench_gen(
        &p,
        &vcc_core::pipeline::BenchGenArgs {
            pool: small,
            out_dir: f.dir.path().join("two"),
        },
    )
    .unwrap();
    assert_eq!(built.clones.len(), 20);
    assert_eq!(built.stats.pairs, 2);
}

#[test]
fn clone_ids_labels_and_truth_line_up() {
    let f = BenchFixture::new();
    let (built, dir) = f.generate("a");
    for c in &built.clones {
        let side = if c.origin_side == OriginSide::Vulnerable { "v" } else { "f" };
        assert!(c.clone_id.starts_with(&format!("{}-{side}-", c.origin_pair_id)));
        assert_eq!(c.label, c.origin_side == OriginSide::Vulnerable);
        assert!(c.token_diff > 0, "{}", c.clone_id);
    }
    let truth: Vec<EvalQuery> = jsonl::read(&dir.join("truth.jsonl")).unwrap();
    assert_eq!(truth.len(), 10);
    for q in &truth {
        assert_eq!(q.ground_truth.len(), 5);
        for id in &q.ground_truth {
            let c = built.clones.iter().find(|c| &c.clone_id == id).unwrap();
            assert!(c.label && c.origin_pair_id == q.query_id);
        }
    }
    let mut templates: Vec<String> = fs::read_dir(dir.join("prompts"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    templates.sort();
    assert_eq!(templates, ["clone_t2.v1.txt", "clone_t3.v1.txt", "clone_t4.v1.txt"]);
}

#[test]
fn type2_clones_keep_shape() {
    let f = BenchFixture::new();
    let (built, _) = f.generate("a");
    let pairs: Vec<FunctionPair> = jsonl::read(&f.pool()).unwrap();
    for c in built.clones.iter().filter(|c| c.clone_type == CloneType::T2) {
        let p = pairs.iter().find(|p| p.pair_id() == c.origin_pair_id).unwrap();
        let origin = match c.origin_side {
            OriginSide::Vulnerable => &p.vulnerable.text,
            OriginSide::Fixed => &p.fixed.text,
        };
        assert!(bench::same_shape_modulo_names(origin, &c.text), "{}", c.clone_id);
    }
}

#[test]
fn prompt_matches_template_rendered_elsewhere() {
    let pairs: Vec<FunctionPair> = jsonl::read(&fixture("bench/pairs.jsonl")).unwrap();
    let p = pairs.iter().find(|p| p.vulnerable.name == "ByteBuffer::append").unwrap();
    let seed = bench::derive_seed(7, p.pair_id(), OriginSide::Vulnerable, CloneType::T3, 1);
    assert_eq!(seed, 315_491_271_470_409_749);
    let prompt = bench::clone_prompt(&p.vulnerable.text, Language::Cpp, CloneType::T3, seed).unwrap();
    assert_eq!(prompt, fs::read_to_string(fixture("bench/golden_prompt_t3.txt")).unwrap());
}

#[test]
fn audit_sheet_samples_requested_count() {
    let f = BenchFixture::new();
    let (built, _) = f.generate("a");
    let pairs: Vec<FunctionPair> = jsonl::read(&f.pool()).unwrap();
    let sheet = bench::audit_sheet(&built.clones, &pairs, 12, 3);
    assert_eq!(sheet.matches("- [ ]").count() % 12, 0);
    assert!(sheet.matches("- [ ]").count() >= 12);
    assert_eq!(sheet, bench::audit_sheet(&built.clones, &pairs, 12, 3));
    assert_ne!(sheet, bench::audit_sheet(&built.clones, &pairs, 12, 4));
}
