//! Stage drivers behind the `vcc` command line: one config file, JSON Lines
//! between stages, atomic writes.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::{self, HashMatch};
use crate::bench::{self, BenchManifest, BenchPlan, CloneRecord};
use crate::corpus::{self, FunctionPair, FunctionRecord, Language, RepoManifestEntry};
use crate::detect::{self, CandidateClone, DetectConfig, RankedCandidates, VulnEntry};
use crate::embed::{self, EmbedProviderConfig, EmbeddingVector, StoredVector};
use crate::error::{Error, Result};
use crate::index::VectorIndex;
use crate::metrics::{self, EvalQuery, MetricReport, RankedList};
use crate::normalize;
use crate::validate::{
    self, render_prompt, prompt_digest, LlmProviderConfig, ParseStatus, ValidateOptions, ValidationRequest,
    ValidationVerdict,
};
use crate::jsonl;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepoSource {
    pub name: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sources {
    pub repos: Vec<RepoSource>,
    pub languages: Vec<Language>,
    /// Repository manifest; when set, only repositories passing the
    /// activity and merge-rate filter are ingested.
    pub manifest: Option<String>,
    pub max_months: f64,
    pub min_merge_rate: f64,
    /// Benchmark clones file used as the target corpus instead of `repos`.
    pub clones: Option<String>,
}

impl Default for Sources {
    fn default() -> Self {
        Sources {
            repos: Vec::new(),
            languages: Language::ALL.to_vec(),
            manifest: None,
            max_months: corpus::DEFAULT_MAX_MONTHS,
            min_merge_rate: corpus::DEFAULT_MIN_MERGE_RATE,
            clones: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub pairs: String,
    pub corpus: String,
    pub embeddings: String,
    pub entry_embeddings: String,
    pub candidates: String,
    pub verdicts: String,
    pub hash_matches: String,
    pub evaluation: String,
    pub report: String,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            pairs: "pairs.jsonl".into(),
            corpus: "out/corpus.jsonl".into(),
            embeddings: "out/embeddings.jsonl".into(),
            entry_embeddings: "out/entry_embeddings.jsonl".into(),
            candidates: "out/candidates.jsonl".into(),
            verdicts: "out/verdicts.jsonl".into(),
            hash_matches: "out/hash_matches.jsonl".into(),
            evaluation: "out/evaluation.json".into(),
            report: "out/report.json".into(),
        }
    }
}

impl Paths {
    fn all(&self) -> [(&'static str, &str); 9] {
        [
            ("pairs", &self.pairs),
            ("corpus", &self.corpus),
            ("embeddings", &self.embeddings),
            ("entry_embeddings", &self.entry_embeddings),
            ("candidates", &self.candidates),
            ("verdicts", &self.verdicts),
            ("hash_matches", &self.hash_matches),
            ("evaluation", &self.evaluation),
            ("report", &self.report),
        ]
    }
}

/// Percentile bounds on the vulnerable function's line count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthFilter {
    pub low_pct: f64,
    pub high_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub sources: Sources,
    pub paths: Paths,
    pub pair_length_filter: Option<LengthFilter>,
    pub detect: DetectConfig,
    pub embed: EmbedProviderConfig,
    pub llm: LlmProviderConfig,
    /// Model used to write Type-2/3/4 benchmark clones.
    pub generator: LlmProviderConfig,
    pub bench: BenchPlan,
}

impl PipelineConfig {
    pub fn check(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (name, p) in self.paths.all() {
            if !seen.insert(Path::new(p).to_path_buf()) {
                return Err(Error::InvalidConfig(format!("paths.{name} repeats another path: {p}")));
            }
        }
        self.detect.validate()
    }

    /// SHA-256 over the canonical JSON of the effective configuration.
    pub fn fingerprint(&self) -> String {
        let value = serde_json::to_value(self).expect("serializable config");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// A loaded configuration plus the directory its relative paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub base: PathBuf,
}

impl Pipeline {
    pub fn load(config_path: &Path) -> Result<Self> {
        let config: PipelineConfig = jsonl::read_json(config_path)?;
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Pipeline { config, base })
    }

    pub fn new(config: PipelineConfig, base: impl Into<PathBuf>) -> Self {
        Pipeline {
            config,
            base: base.into(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.base.join(rel)
    }

    fn pairs(&self) -> Result<Vec<FunctionPair>> {
        let pairs: Vec<FunctionPair> = jsonl::read(&self.path(&self.config.paths.pairs))?;
        match self.config.pair_length_filter {
            Some(f) if !pairs.is_empty() => corpus::filter_by_length_percentile(&pairs, f.low_pct, f.high_pct),
            _ => Ok(pairs),
        }
    }

    fn corpus(&self) -> Result<Vec<FunctionRecord>> {
        jsonl::read(&self.path(&self.config.paths.corpus))
    }

    fn vectors(&self, rel: &str) -> Result<Vec<EmbeddingVector>> {
        jsonl::read::<StoredVector>(&self.path(rel))?
            .into_iter()
            .map(EmbeddingVector::try_from)
            .collect()
    }
}

fn vuln_key(pair_id: &str) -> String {
    format!("{pair_id}/vulnerable")
}

fn fixed_key(pair_id: &str) -> String {
    format!("{pair_id}/fixed")
}

pub fn extract(p: &Pipeline) -> Result<usize> {
    let src = &p.config.sources;
    let records: Vec<FunctionRecord> = if let Some(clones) = &src.clones {
        jsonl::read::<CloneRecord>(&p.path(clones))?
            .iter()
            .map(CloneRecord::to_target)
            .collect()
    } else {
        let allowed: Option<HashSet<String>> = match &src.manifest {
            Some(m) => {
                let entries: Vec<RepoManifestEntry> = jsonl::read(&p.path(m))?;
                let kept = corpus::filter_manifest(&entries, src.max_months, src.min_merge_rate);
                Some(kept.into_iter().map(|e| e.slug).collect())
            }
            None => None,
        };
        let languages: HashSet<Language> = src.languages.iter().copied().collect();
        let mut all = Vec::new();
        for repo in &src.repos {
            if allowed.as_ref().is_some_and(|a| !a.contains(&repo.name)) {
                log::info!("skipping {}: filtered out by the manifest", repo.name);
                continue;
            }
            let root = p.path(&repo.path);
            if !root.is_dir() {
                return Err(Error::io(&root, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
            let ingested = corpus::ingest_repository(&root, &repo.name, &languages)?;
            all.extend(ingested.records);
        }
        all
    };
    if records.is_empty() {
        log::warn!("no functions extracted");
    }
    jsonl::write(&p.path(&p.config.paths.corpus), &records)?;
    Ok(records.len())
}

fn embed_texts(config: &EmbedProviderConfig, items: Vec<(String, String)>) -> Result<Vec<EmbeddingVector>> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    embed::embed_batch(config, &items)
}

pub fn embed_stage(p: &Pipeline) -> Result<(usize, usize)> {
    p.config.embed.validate()?;
    let records = p.corpus()?;
    let pairs = p.pairs()?;
    let targets = embed_texts(
        &p.config.embed,
        records
            .iter()
            .map(|r| (r.id.clone(), normalize::preprocess(&r.text, r.language)))
            .collect(),
    )?;
    let entries = embed_texts(
        &p.config.embed,
        pairs
            .iter()
            .flat_map(|pr| {
                [
                    (vuln_key(pr.pair_id()), normalize::preprocess(&pr.vulnerable.text, pr.vulnerable.language)),
                    (fixed_key(pr.pair_id()), normalize::preprocess(&pr.fixed.text, pr.fixed.language)),
                ]
            })
            .collect(),
    )?;
    let store = |v: &[EmbeddingVector]| v.iter().map(StoredVector::from).collect::<Vec<_>>();
    jsonl::write(&p.path(&p.config.paths.embeddings), &store(&targets))?;
    jsonl::write(&p.path(&p.config.paths.entry_embeddings), &store(&entries))?;
    Ok((targets.len(), pairs.len()))
}

/// Builds detection entries from pairs and their stored embeddings. A
/// vulnerable function that is itself one of `target_ids` is excluded
/// from its own results.
pub fn vuln_entries(
    pairs: &[FunctionPair],
    vectors: Vec<EmbeddingVector>,
    target_ids: &HashSet<&str>,
) -> Result<Vec<VulnEntry>> {
    let mut by_id: HashMap<String, EmbeddingVector> = vectors.into_iter().map(|v| (v.source_id.clone(), v)).collect();
    pairs
        .iter()
        .map(|pr| {
            let mut take = |k: String| {
                by_id
                    .remove(&k)
                    .ok_or_else(|| Error::Contract(format!("no embedding stored for {k}")))
            };
            let v = take(vuln_key(pr.pair_id()))?;
            let f = take(fixed_key(pr.pair_id()))?;
            let mut e = VulnEntry::from_pair(pr, v, f);
            if target_ids.contains(pr.vulnerable.id.as_str()) {
                e.origin_target_id = Some(pr.vulnerable.id.clone());
            }
            Ok(e)
        })
        .collect()
}

pub fn detect_stage(p: &Pipeline) -> Result<Vec<CandidateClone>> {
    p.config.detect.validate()?;
    let pairs = p.pairs()?;
    let targets = p.vectors(&p.config.paths.embeddings)?;
    let entry_vectors = p.vectors(&p.config.paths.entry_embeddings)?;
    let candidates = if targets.is_empty() || pairs.is_empty() {
        log::warn!("nothing to search: {} targets, {} pairs", targets.len(), pairs.len());
        Vec::new()
    } else {
        let ids: HashSet<&str> = targets.iter().map(|t| t.source_id.as_str()).collect();
        let entries = vuln_entries(&pairs, entry_vectors.clone(), &ids)?;
        let index = VectorIndex::build(&targets)?;
        detect::filter_against_fixed(detect::retrieve_candidates(&entries, &index, &p.config.detect)?)
    };
    jsonl::write(&p.path(&p.config.paths.candidates), &candidates)?;
    Ok(candidates)
}

/// Per-run outcome stored next to the aggregate verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub is_vulnerable: bool,
    pub confidence_level: u8,
    pub parse_status: ParseStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub entry_id: String,
    pub target_id: String,
    #[serde(flatten)]
    pub verdict: ValidationVerdict,
    pub runs: Vec<RunOutcome>,
}

fn validation_requests(p: &Pipeline, candidates: &[CandidateClone]) -> Result<Vec<ValidationRequest>> {
    let pairs = p.pairs()?;
    let records = p.corpus()?;
    let pair_by_id: HashMap<&str, &FunctionPair> = pairs.iter().map(|x| (x.pair_id(), x)).collect();
    let text_by_id: HashMap<&str, &str> = records.iter().map(|r| (r.id.as_str(), r.text.as_str())).collect();
    candidates
        .iter()
        .filter(|c| c.kept)
        .map(|c| {
            let pair = pair_by_id
                .get(c.entry_id.as_str())
                .ok_or_else(|| Error::Contract(format!("candidate refers to unknown entry {}", c.entry_id)))?;
            let target = text_by_id
                .get(c.target_id.as_str())
                .ok_or_else(|| Error::Contract(format!("candidate refers to unknown target {}", c.target_id)))?;
            Ok(ValidationRequest {
                entry_id: c.entry_id.clone(),
                target_id: c.target_id.clone(),
                original_function: pair.vulnerable.text.clone(),
                fixed_function: pair.fixed.text.clone(),
                cloned_function: target.to_string(),
            })
        })
        .collect()
}

/// Prompts of kept candidates the replay fixture cannot answer, as
/// `(digest, prompt)`.
pub fn missing_prompts(p: &Pipeline, digests: &[String]) -> Result<Vec<(String, String)>> {
    let candidates: Vec<CandidateClone> = jsonl::read(&p.path(&p.config.paths.candidates))?;
    let wanted: HashSet<&str> = digests.iter().map(String::as_str).collect();
    let mut out = BTreeMap::new();
    for req in validation_requests(p, &candidates)? {
        let prompt = render_prompt(&req)?;
        let d = prompt_digest(&prompt);
        if wanted.contains(d.as_str()) {
            out.insert(d, prompt);
        }
    }
    Ok(out.into_iter().collect())
}

pub fn validate_stage(p: &Pipeline) -> Result<Vec<VerdictRecord>> {
    let candidates: Vec<CandidateClone> = jsonl::read(&p.path(&p.config.paths.candidates))?;
    let requests = validation_requests(p, &candidates)?;
    let records = if requests.is_empty() {
        Vec::new()
    } else {
        let provider = validate::provider_from_config(&p.config.llm, &p.base)?;
        let results = validate::validate_all(
            provider.as_ref(),
            &requests,
            ValidateOptions::from(&p.config.llm),
            p.config.llm.max_in_flight,
        )?;
        requests
            .iter()
            .zip(results)
            .map(|(req, r)| VerdictRecord {
                entry_id: req.entry_id.clone(),
                target_id: req.target_id.clone(),
                runs: r
                    .runs
                    .iter()
                    .map(|v| RunOutcome {
                        is_vulnerable: v.is_vulnerable,
                        confidence_level: v.confidence_level,
                        parse_status: v.parse_status,
                    })
                    .collect(),
                verdict: r.verdict,
            })
            .collect()
    };
    jsonl::write(&p.path(&p.config.paths.verdicts), &records)?;
    Ok(records)
}

pub fn baseline_stage(p: &Pipeline) -> Result<Vec<HashMatch>> {
    let pairs = p.pairs()?;
    let records = p.corpus()?;
    let ids: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let entries: Vec<VulnEntry> = pairs
        .iter()
        .map(|pr| {
            // the hash baseline needs no embeddings
            let empty = EmbeddingVector {
                source_id: pr.pair_id().to_string(),
                values: Vec::new(),
            };
            let mut e = VulnEntry::from_pair(pr, empty.clone(), empty);
            if ids.contains(pr.vulnerable.id.as_str()) {
                e.origin_target_id = Some(pr.vulnerable.id.clone());
            }
            e
        })
        .collect();
    let matches = baseline::run_hash_baseline(&entries, &records);
    jsonl::write(&p.path(&p.config.paths.hash_matches), &matches)?;
    Ok(matches)
}

/// What `evaluate` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSource {
    /// Embedding candidates, with and without validation verdicts.
    Candidates,
    /// Abstraction-hash matches.
    HashMatches,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    #[serde(flatten)]
    pub report: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub config_fingerprint: String,
    pub seed: u64,
    pub threshold_t: f64,
    pub methods: Vec<MethodReport>,
}

fn verdict_maps(records: &[VerdictRecord]) -> (HashMap<String, ValidationVerdict>, Vec<HashMap<String, ValidationVerdict>>) {
    let voted = records
        .iter()
        .map(|r| (r.target_id.clone(), r.verdict.clone()))
        .collect();
    let runs = records.iter().map(|r| r.runs.len()).max().unwrap_or(0);
    let per_run = (0..runs)
        .map(|i| {
            records
                .iter()
                .filter_map(|r| {
                    r.runs.get(i).map(|o| {
                        (
                            r.target_id.clone(),
                            ValidationVerdict {
                                is_vulnerable: o.is_vulnerable,
                                confidence_level: o.confidence_level,
                                justification: String::new(),
                                parse_status: o.parse_status,
                                raw_response: String::new(),
                            },
                        )
                    })
                })
                .collect()
        })
        .collect();
    (voted, per_run)
}

fn to_lists(ranked: &[RankedCandidates]) -> Vec<RankedList> {
    ranked.iter().map(RankedCandidates::to_ranked_list).collect()
}

pub fn evaluate_stage(p: &Pipeline, truth: &Path, source: EvalSource) -> Result<Evaluation> {
    let truths: Vec<EvalQuery> = jsonl::read(truth)?;
    let ks = metrics::DEFAULT_KS;
    let mut methods = Vec::new();
    match source {
        EvalSource::HashMatches => {
            let matches: Vec<HashMatch> = jsonl::read(&p.path(&p.config.paths.hash_matches))?;
            methods.push(MethodReport {
                method: "hash".into(),
                report: metrics::evaluate(&baseline::matches_to_ranked(&matches), &truths, &ks)?,
            });
        }
        EvalSource::Candidates => {
            let candidates: Vec<CandidateClone> = jsonl::read(&p.path(&p.config.paths.candidates))?;
            methods.push(MethodReport {
                method: "retrieval".into(),
                report: metrics::evaluate(&to_lists(&detect::rank_candidates(&candidates, None)), &truths, &ks)?,
            });
            let verdicts_path = p.path(&p.config.paths.verdicts);
            if verdicts_path.exists() {
                let records: Vec<VerdictRecord> = jsonl::read(&verdicts_path)?;
                let (voted, per_run) = verdict_maps(&records);
                methods.push(MethodReport {
                    method: "validated".into(),
                    report: metrics::evaluate(
                        &to_lists(&detect::rank_candidates(&candidates, Some(&voted))),
                        &truths,
                        &ks,
                    )?,
                });
                if per_run.len() > 1 {
                    let reports = per_run
                        .iter()
                        .map(|m| metrics::evaluate(&to_lists(&detect::rank_candidates(&candidates, Some(m))), &truths, &ks))
                        .collect::<Result<Vec<_>>>()?;
                    methods.push(MethodReport {
                        method: "validated_run_average".into(),
                        report: metrics::average_reports(&reports).expect("at least two runs"),
                    });
                }
            }
        }
    }
    let evaluation = Evaluation {
        config_fingerprint: p.config.fingerprint(),
        seed: p.config.seed,
        threshold_t: p.config.detect.threshold_t,
        methods,
    };
    let out = p.path(&p.config.paths.evaluation);
    jsonl::write_json(&out, &evaluation)?;
    let rows: Vec<(&str, &MetricReport)> = evaluation.methods.iter().map(|m| (m.method.as_str(), &m.report)).collect();
    jsonl::write_atomic(&out.with_extension("md"), metrics::markdown_tables(&rows).as_bytes())?;
    Ok(evaluation)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub rank: usize,
    pub target_id: String,
    pub repo: String,
    pub path: String,
    pub function: String,
    pub start_line: usize,
    pub end_line: usize,
    pub sim_vuln: f64,
    pub sim_fixed: f64,
    pub is_vulnerable: bool,
    pub confidence_level: u8,
    pub parse_status: ParseStatus,
    pub justification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryFindings {
    pub entry_id: String,
    pub cve_id: String,
    pub cwe_id: String,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub entries: usize,
    pub candidates: usize,
    pub kept: usize,
    pub validated: usize,
    pub failed: usize,
    pub confirmed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingReport {
    pub config_fingerprint: String,
    pub seed: u64,
    pub threshold_t: f64,
    pub summary: ReportSummary,
    pub entries: Vec<EntryFindings>,
}

pub fn report_stage(p: &Pipeline) -> Result<FindingReport> {
    let pairs = p.pairs()?;
    let records = p.corpus()?;
    let candidates: Vec<CandidateClone> = jsonl::read(&p.path(&p.config.paths.candidates))?;
    let verdict_records: Vec<VerdictRecord> = jsonl::read(&p.path(&p.config.paths.verdicts))?;
    let (voted, _) = verdict_maps(&verdict_records);
    let by_id: HashMap<&str, &FunctionRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let pair_by_id: HashMap<&str, &FunctionPair> = pairs.iter().map(|x| (x.pair_id(), x)).collect();

    let mut entries = Vec::new();
    for ranked in detect::rank_candidates(&candidates, Some(&voted)) {
        let pair = pair_by_id.get(ranked.entry_id.as_str());
        let findings = ranked
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let v = &voted[&c.target_id];
                let rec = by_id.get(c.target_id.as_str());
                Finding {
                    rank: i + 1,
                    target_id: c.target_id.clone(),
                    repo: rec.map(|r| r.repo.clone()).unwrap_or_default(),
                    path: rec.map(|r| r.path.clone()).unwrap_or_default(),
                    function: rec.map(|r| r.name.clone()).unwrap_or_default(),
                    start_line: rec.map_or(0, |r| r.start_line),
                    end_line: rec.map_or(0, |r| r.end_line),
                    sim_vuln: c.sim_vuln,
                    sim_fixed: c.sim_fixed,
                    is_vulnerable: v.is_vulnerable,
                    confidence_level: v.confidence_level,
                    parse_status: v.parse_status,
                    justification: v.justification.clone(),
                }
            })
            .collect();
        entries.push(EntryFindings {
            cve_id: pair.map(|x| x.cve_id.clone()).unwrap_or_default(),
            cwe_id: pair.map(|x| x.cwe_id.clone()).unwrap_or_default(),
            entry_id: ranked.entry_id,
            findings,
        });
    }
    let summary = ReportSummary {
        entries: pairs.len(),
        candidates: candidates.len(),
        kept: candidates.iter().filter(|c| c.kept).count(),
        validated: verdict_records.len(),
        failed: verdict_records
            .iter()
            .filter(|r| r.verdict.parse_status == ParseStatus::Failed)
            .count(),
        confirmed: entries.iter().map(|e| e.findings.len()).sum(),
    };
    let report = FindingReport {
        config_fingerprint: p.config.fingerprint(),
        seed: p.config.seed,
        threshold_t: p.config.detect.threshold_t,
        summary,
        entries,
    };
    let out = p.path(&p.config.paths.report);
    jsonl::write_json(&out, &report)?;
    jsonl::write_atomic(&out.with_extension("md"), report_markdown(&report).as_bytes())?;
    Ok(report)
}

pub fn report_markdown(r: &FindingReport) -> String {
    let s = &r.summary;
    let mut out = String::from("# Vulnerable clone report\n\n");
    let _ = writeln!(out, "Config fingerprint `{}`, seed {}, threshold {}.\n", r.config_fingerprint, r.seed, r.threshold_t);
    out.push_str("| Entries | Candidates | Kept | Validated | Failed | Confirmed |\n|---:|---:|---:|---:|---:|---:|\n");
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} | {} |",
        s.entries, s.candidates, s.kept, s.validated, s.failed, s.confirmed
    );
    for e in r.entries.iter().filter(|e| !e.findings.is_empty()) {
        let _ = write!(out, "\n## {} ({}, {})\n", e.entry_id, e.cve_id, e.cwe_id);
        for f in &e.findings {
            let _ = write!(
                out,
                "\n{}. `{}` in {}:{} lines {}-{}, similarity {:.4} (fixed {:.4}), confidence {}\n\n   {}\n",
                f.rank,
                f.function,
                f.repo,
                f.path,
                f.start_line,
                f.end_line,
                f.sim_vuln,
                f.sim_fixed,
                f.confidence_level,
                f.justification.replace('\n', " ")
            );
        }
    }
    out
}

/// Where `bench_gen` writes and what it reads.
#[derive(Debug, Clone)]
pub struct BenchGenArgs {
    pub pool: PathBuf,
    pub out_dir: PathBuf,
}

pub fn bench_gen(p: &Pipeline, args: &BenchGenArgs) -> Result<bench::Benchmark> {
    let pool: Vec<FunctionPair> = jsonl::read(&args.pool)?;
    let pool = match p.config.pair_length_filter {
        Some(f) if !pool.is_empty() => corpus::filter_by_length_percentile(&pool, f.low_pct, f.high_pct)?,
        _ => pool,
    };
    let plan = &p.config.bench;
    let pairs = bench::cwe_sample(&pool, plan, p.config.seed);
    let provider = validate::provider_from_config(&p.config.generator, &p.base)?;
    let built = bench::assemble_benchmark(&pairs, plan, provider.as_ref(), p.config.seed, p.config.generator.max_in_flight)?;
    let manifest = BenchManifest {
        seed: p.config.seed,
        plan: plan.clone(),
        generator: provider.fingerprint(),
        template_version: bench::TEMPLATE_VERSION.into(),
        pairs: pairs.len(),
        clones: built.clones.len(),
    };
    bench::write_archive(&args.out_dir, &pairs, &built, &manifest)?;
    jsonl::write_atomic(&args.out_dir.join("stats.md"), bench::stats_table(&built.stats).as_bytes())?;
    Ok(built)
}

/// First-attempt generation prompts for the sampled pairs.
pub fn bench_prompts(p: &Pipeline, pool: &Path) -> Result<Vec<(String, String)>> {
    let pool: Vec<FunctionPair> = jsonl::read(pool)?;
    let pairs = bench::cwe_sample(&pool, &p.config.bench, p.config.seed);
    bench::generation_prompts(&pairs, &p.config.bench, p.config.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_tracks_effective_config() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.detect.threshold_t = 0.85;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn repeated_paths_rejected() {
        let mut c = PipelineConfig::default();
        c.paths.verdicts = c.paths.candidates.clone();
        assert!(matches!(c.check(), Err(Error::InvalidConfig(_))));
        assert!(PipelineConfig::default().check().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"sed": 1}"#).is_err());
        let c: PipelineConfig = serde_json::from_str(r#"{"seed": 3, "detect": {"threshold_t": 0.85}}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.detect.threshold_t, 0.85);
        assert_eq!(c.embed.dimension, 512);
    }
}
