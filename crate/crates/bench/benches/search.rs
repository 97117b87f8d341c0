use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vcc_bench::unit_vectors;
use vcc_core::detect::{retrieve_candidates, DetectConfig, VulnEntry};
use vcc_core::index::VectorIndex;
use vcc_core::Language;

fn bench_queries(c: &mut Criterion) {
    let mut group = c.benchmark_group("index");
    for n in [1_000, 10_000] {
        let index = VectorIndex::build(&unit_vectors(n, 512, 1)).unwrap();
        let q = unit_vectors(1, 512, 2).remove(0).values;
        group.bench_with_input(BenchmarkId::new("query_threshold", n), &n, |b, _| {
            b.iter(|| index.query_threshold(black_box(&q), 0.1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("query_topk_10", n), &n, |b, _| {
            b.iter(|| index.query_topk(black_box(&q), 10).unwrap())
        });
    }
    group.finish();
}

fn bench_retrieval(c: &mut Criterion) {
    let index = VectorIndex::build(&unit_vectors(10_000, 512, 3)).unwrap();
    let vuln = unit_vectors(50, 512, 4);
    let fixed = unit_vectors(50, 512, 5);
    let entries: Vec<VulnEntry> = vuln
        .into_iter()
        .zip(fixed)
        .enumerate()
        .map(|(i, (v, f))| VulnEntry {
            entry_id: format!("e{i}"),
            cve_id: String::new(),
            cwe_id: String::new(),
            language: Language::C,
            vulnerable_text: "a".into(),
            fixed_text: "b".into(),
            vulnerable_vec: v,
            fixed_vec: f,
            origin_target_id: None,
        })
        .collect();
    let config = DetectConfig {
        threshold_t: 0.05,
        ..DetectConfig::default()
    };
    c.bench_function("retrieve_50x10000", |b| {
        b.iter(|| retrieve_candidates(black_box(&entries), &index, &config).unwrap())
    });
}

criterion_group!(benches, bench_queries, bench_retrieval);
criterion_main!(benches);
