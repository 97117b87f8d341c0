#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use tempfile::TempDir;
use vcc_core::pipeline::{self, EvalSource, Evaluation, FindingReport, Pipeline};

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dest = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            if entry.file_name() != "out" {
                copy_tree(&entry.path(), &dest);
            }
        } else {
            fs::copy(entry.path(), dest).unwrap();
        }
    }
}

/// A private copy of the end-to-end fixture, so stage outputs never land in
/// the source tree.
pub struct E2e {
    pub dir: TempDir,
}

impl E2e {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        copy_tree(&fixture("e2e"), dir.path());
        E2e { dir }
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn pipeline(&self) -> Pipeline {
        Pipeline::load(&self.root().join("config.json")).unwrap()
    }

    pub fn with_threshold(&self, t: f64) -> Pipeline {
        let mut p = self.pipeline();
        p.config.detect.threshold_t = t;
        p
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.root().join("out").join(name)
    }

    pub fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.out(name)).unwrap()
    }
}

pub struct RunOutput {
    pub evaluation: Evaluation,
    pub report: FindingReport,
}

/// extract, embed, detect, validate, evaluate, report.
pub fn run_all(p: &Pipeline, truth: &Path) -> RunOutput {
    pipeline::extract(p).unwrap();
    pipeline::embed_stage(p).unwrap();
    pipeline::detect_stage(p).unwrap();
    pipeline::validate_stage(p).unwrap();
    let evaluation = pipeline::evaluate_stage(p, truth, EvalSource::Candidates).unwrap();
    let report = pipeline::report_stage(p).unwrap();
    RunOutput { evaluation, report }
}

/// A private copy of the benchmark fixture (ten pairs, replayed generator).
pub struct BenchFixture {
    pub dir: TempDir,
}

impl BenchFixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        copy_tree(&fixture("bench"), dir.path());
        BenchFixture { dir }
    }

    pub fn pipeline(&self) -> Pipeline {
        Pipeline::load(&self.dir.path().join("config.json")).unwrap()
    }

    pub fn pool(&self) -> PathBuf {
        self.dir.path().join("pairs.jsonl")
    }

    pub fn generate(&self, out: &str) -> (vcc_core::bench::Benchmark, PathBuf) {
        let out_dir = self.dir.path().join(out);
        let bench = pipeline::bench_gen(
            &self.pipeline(),
            &pipeline::BenchGenArgs {
                pool: self.pool(),
                out_dir: out_dir.clone(),
            },
        )
        .unwrap();
        (bench, out_dir)
    }
}

/// Hash-baseline entries for a set of pairs; the baseline reads only texts.
pub fn hash_entries(pairs: &[vcc_core::FunctionPair]) -> Vec<vcc_core::detect::VulnEntry> {
    pairs
        .iter()
        .map(|p| {
            let empty = vcc_core::embed::EmbeddingVector {
                source_id: p.pair_id().to_string(),
                values: Vec::new(),
            };
            vcc_core::detect::VulnEntry::from_pair(p, empty.clone(), empty)
        })
        .collect()
}
