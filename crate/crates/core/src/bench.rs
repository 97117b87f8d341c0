//! Synthetic clone benchmark: per-CWE pair sampling, Type-1 to Type-4
//! clone generation, token-diff statistics and the on-disk archive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, FunctionPair, FunctionRecord, Language};
use crate::error::{Error, Result};
use crate::lexer::{self, TokenKind};
use crate::metrics::EvalQuery;
use crate::validate::{prompt_digest, render_template, LlmProvider};
use crate::{http, jsonl};

pub const TEMPLATE_VERSION: &str = "v1";
const T2_TEMPLATE: &str = include_str!("../templates/clone_t2.v1.txt");
const T3_TEMPLATE: &str = include_str!("../templates/clone_t3.v1.txt");
const T4_TEMPLATE: &str = include_str!("../templates/clone_t4.v1.txt");

/// Extra attempts after a rejected generation.
pub const MAX_CLONE_RETRIES: usize = 2;

pub const DEFAULT_CWE_PRIORITY: [&str; 12] = [
    "CWE-79", "CWE-787", "CWE-22", "CWE-125", "CWE-78", "CWE-416", "CWE-94", "CWE-20", "CWE-862", "CWE-77",
    "CWE-89", "CWE-287",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CloneType {
    T1,
    T2,
    T3,
    T4,
}

impl CloneType {
    pub const ALL: [CloneType; 4] = [CloneType::T1, CloneType::T2, CloneType::T3, CloneType::T4];

    pub fn as_str(self) -> &'static str {
        match self {
            CloneType::T1 => "T1",
            CloneType::T2 => "T2",
            CloneType::T3 => "T3",
            CloneType::T4 => "T4",
        }
    }

    fn template(self) -> Option<(&'static str, &'static str)> {
        match self {
            CloneType::T1 => None,
            CloneType::T2 => Some(("clone_t2.v1.txt", T2_TEMPLATE)),
            CloneType::T3 => Some(("clone_t3.v1.txt", T3_TEMPLATE)),
            CloneType::T4 => Some(("clone_t4.v1.txt", T4_TEMPLATE)),
        }
    }
}

impl fmt::Display for CloneType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OriginSide {
    Vulnerable,
    Fixed,
}

impl OriginSide {
    fn letter(self) -> &'static str {
        match self {
            OriginSide::Vulnerable => "v",
            OriginSide::Fixed => "f",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneRecord {
    pub clone_id: String,
    pub origin_pair_id: String,
    pub origin_side: OriginSide,
    pub clone_type: CloneType,
    pub language: Language,
    pub text: String,
    /// True iff the clone derives from the vulnerable side.
    pub label: bool,
    pub token_diff: usize,
}

impl CloneRecord {
    /// View of the clone as a scan target.
    pub fn to_target(&self) -> FunctionRecord {
        let name = corpus::parse_functions(&self.text, self.language)
            .ok()
            .and_then(|f| f.into_iter().next())
            .map(|f| f.name)
            .unwrap_or_default();
        FunctionRecord {
            id: self.clone_id.clone(),
            repo: "benchmark".into(),
            path: format!("{}.{}", self.clone_id, extension(self.language)),
            language: self.language,
            name,
            start_line: 1,
            end_line: self.text.split('\n').count(),
            text: self.text.clone(),
        }
    }
}

fn extension(language: Language) -> &'static str {
    match language {
        Language::C => "c",
        Language::Cpp => "cpp",
        Language::Java => "java",
    }
}

fn display_name(language: Language) -> &'static str {
    match language {
        Language::C => "C",
        Language::Cpp => "C++",
        Language::Java => "Java",
    }
}

/// Clones to generate per function, by type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClonePlan {
    #[serde(rename = "T1")]
    pub t1: usize,
    #[serde(rename = "T2")]
    pub t2: usize,
    #[serde(rename = "T3")]
    pub t3: usize,
    #[serde(rename = "T4")]
    pub t4: usize,
}

impl ClonePlan {
    pub fn count(&self, t: CloneType) -> usize {
        match t {
            CloneType::T1 => self.t1,
            CloneType::T2 => self.t2,
            CloneType::T3 => self.t3,
            CloneType::T4 => self.t4,
        }
    }

    pub fn per_function(&self) -> usize {
        self.t1 + self.t2 + self.t3 + self.t4
    }
}

impl Default for ClonePlan {
    fn default() -> Self {
        ClonePlan { t1: 1, t2: 1, t3: 2, t4: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchPlan {
    pub pairs_per_cwe_cap: usize,
    pub clones_per_function: ClonePlan,
    pub target_pairs: usize,
    pub cwe_priority: Vec<String>,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            pairs_per_cwe_cap: 10,
            clones_per_function: ClonePlan::default(),
            target_pairs: 100,
            cwe_priority: DEFAULT_CWE_PRIORITY.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<()> {
        if self.pairs_per_cwe_cap == 0 || self.target_pairs == 0 {
            return Err(Error::InvalidConfig("bench cap and target_pairs must be positive".into()));
        }
        if self.clones_per_function.per_function() == 0 {
            return Err(Error::InvalidConfig("clone plan generates nothing".into()));
        }
        Ok(())
    }

    /// Clones produced for `pairs` source pairs.
    pub fn total_clones(&self, pairs: usize) -> usize {
        2 * pairs * self.clones_per_function.per_function()
    }
}

/// Seeded sample with at most `pairs_per_cwe_cap` pairs per CWE. CWEs in
/// the priority list go first, in list order, then the rest by id.
pub fn cwe_sample(pool: &[FunctionPair], plan: &BenchPlan, seed: u64) -> Vec<FunctionPair> {
    let mut groups: BTreeMap<&str, Vec<&FunctionPair>> = BTreeMap::new();
    for p in pool {
        groups.entry(p.cwe_id.as_str()).or_default().push(p);
    }
    let mut order: Vec<&str> = plan
        .cwe_priority
        .iter()
        .map(String::as_str)
        .filter(|c| groups.contains_key(c))
        .collect();
    let rest: Vec<&str> = groups.keys().copied().filter(|c| !order.contains(c)).collect();
    order.extend(rest);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for cwe in order {
        if out.len() >= plan.target_pairs {
            break;
        }
        let mut group = groups.remove(cwe).unwrap_or_default();
        group.sort_by(|a, b| a.pair_id().cmp(b.pair_id()));
        group.shuffle(&mut rng);
        let take = plan.pairs_per_cwe_cap.min(plan.target_pairs - out.len());
        out.extend(group.into_iter().take(take).cloned());
    }
    if out.len() < plan.target_pairs {
        log::warn!(
            "pool yields {} pairs under the per-CWE cap, fewer than the target {}",
            out.len(),
            plan.target_pairs
        );
    }
    out
}

const COMMENTS: &[&str] = &[
    "check the input before it is used",
    "fast path",
    "TODO: revisit once the caller has been refactored",
    "keep this in sync with the header declaration",
    "the buffer is owned by the caller",
    "update bookkeeping",
    "error handling follows",
    "NOTE: the order of these checks matters",
    "walk every entry",
    "release what was acquired above",
    "compute the result",
    "see the module notes for the full protocol description",
    "nothing to do here in the common case",
    "legacy behavior, do not change without a migration",
];

const INDENTS: [&str; 3] = ["  ", "    ", "\t"];

fn indent_width(ws: &str) -> usize {
    ws.chars().map(|c| if c == '\t' { 4 } else { 1 }).sum()
}

/// Type-1 clone: re-indentation, blank-line edits, inserted comments and a
/// line-ending flip, chosen by `seed`. At least one comment is always
/// inserted. Code tokens are never touched.
pub fn gen_type1(text: &str, language: Language, seed: u64) -> Result<String> {
    let tree = corpus::parse_tree(text, language)?;
    let func = *corpus::function_nodes(tree.root_node(), language)
        .first()
        .ok_or_else(|| Error::ParseFailure(format!("no {language} function in input")))?;
    let body_start = func.child_by_field_name("body").map(|b| b.start_byte());

    let tokens = lexer::tokenize(text);
    let code: Vec<_> = tokens.iter().filter(|t| !t.kind.is_comment()).collect();
    let body_index = body_start.and_then(|b| code.iter().position(|t| t.span.start == b));
    let inside = |p: usize, strings_only: bool| {
        tokens.iter().any(|t| {
            t.span.start < p && p < t.span.end && (!strings_only || matches!(t.kind, TokenKind::Str | TokenKind::Char))
        })
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let crlf = text.contains("\r\n");
    let indent = rng.random_bool(0.7).then(|| rng.random_range(0..INDENTS.len()));
    let blank_insert_p = if rng.random_bool(0.5) { 0.25 } else { 0.0 };
    let blank_remove = rng.random_bool(0.4);
    let line_comment_p = if rng.random_bool(0.7) { 0.3 } else { 0.0 };
    let block_comment = rng.random_bool(0.5);
    let flip = rng.random_bool(0.3);

    struct Line<'a> {
        start: usize,
        content: &'a str,
        newline: Option<usize>,
    }
    let mut lines = Vec::new();
    let mut start = 0;
    loop {
        let nl = text[start..].find('\n').map(|i| start + i);
        let end = nl.unwrap_or(text.len());
        let content = &text[start..end];
        lines.push(Line {
            start,
            content: content.strip_suffix('\r').unwrap_or(content),
            newline: nl,
        });
        match nl {
            Some(n) => start = n + 1,
            None => break,
        }
    }

    let editable = |l: &Line| !inside(l.start, true);
    let widths: Vec<usize> = lines
        .iter()
        .filter(|l| editable(l) && !l.content.trim().is_empty())
        .map(|l| indent_width(&l.content[..l.content.len() - l.content.trim_start().len()]))
        .collect();
    let base = widths.iter().copied().min().unwrap_or(0);
    let unit = widths
        .iter()
        .filter(|&&w| w > base)
        .map(|w| w - base)
        .min()
        .unwrap_or(4)
        .clamp(1, 8);

    let mut out = String::with_capacity(text.len() * 2);
    let mut inserted = 0usize;
    let mut prev_continues = false;
    for l in &lines {
        let eol_protected = l.newline.is_some_and(|n| inside(n, false));
        let eol_in_string = l.newline.is_some_and(|n| inside(n, true));
        let eol = match (l.newline, eol_in_string) {
            (None, _) => "",
            (Some(_), true) => {
                if text[l.start..].split('\n').next().is_some_and(|s| s.ends_with('\r')) {
                    "\r\n"
                } else {
                    "\n"
                }
            }
            (Some(_), false) => {
                if crlf != flip {
                    "\r\n"
                } else {
                    "\n"
                }
            }
        };
        let blank = l.content.trim().is_empty();
        if blank && editable(l) && !eol_protected && blank_remove && !prev_continues && l.newline.is_some() {
            continue;
        }
        let mut line = String::new();
        if editable(l) && !blank {
            let body = l.content.trim_start();
            match indent {
                Some(style) => {
                    let w = indent_width(&l.content[..l.content.len() - body.len()]);
                    let (levels, rem) = (w / unit, w % unit);
                    line.push_str(&INDENTS[style].repeat(levels));
                    line.push_str(&" ".repeat(rem));
                }
                None => line.push_str(&l.content[..l.content.len() - body.len()]),
            }
            line.push_str(body);
        } else {
            line.push_str(l.content);
        }

        let trimmed_end = l.start + l.content.trim_end().len();
        let last = tokens
            .iter()
            .take_while(|t| t.span.start < trimmed_end)
            .last()
            .filter(|t| t.span.end == trimmed_end && t.span.start >= l.start);
        let boundary = last.is_some_and(|t| t.kind == TokenKind::Punct && matches!(t.text, ";" | "{" | "}"));
        if boundary && !eol_protected && line_comment_p > 0.0 && rng.random_bool(line_comment_p) {
            let phrase = COMMENTS[rng.random_range(0..COMMENTS.len())];
            line.truncate(line.trim_end().len());
            let _ = write!(line, "  // {phrase}");
            inserted += 1;
        }
        out.push_str(&line);
        out.push_str(eol);
        prev_continues = l.content.trim_end().ends_with('\\');
        if l.newline.is_some()
            && !eol_protected
            && !prev_continues
            && blank_insert_p > 0.0
            && rng.random_bool(blank_insert_p)
        {
            out.push_str(if crlf != flip { "\r\n" } else { "\n" });
        }
    }

    if block_comment || inserted == 0 {
        let phrase = COMMENTS[rng.random_range(0..COMMENTS.len())];
        let fresh = lexer::tokenize(&out);
        let at = body_index.and_then(|k| fresh.iter().filter(|t| !t.kind.is_comment()).nth(k).map(|t| t.span.start));
        match at {
            Some(pos) => out.insert_str(pos, &format!("/* {phrase} */ ")),
            None => out.insert_str(0, &format!("/* {phrase} */\n")),
        }
    }
    Ok(out)
}

/// Token-level edit distance over [`lexer::diff_tokens`], so comment words
/// count and whitespace does not.
pub fn token_diff(a: &str, b: &str) -> usize {
    let x = lexer::diff_tokens(a);
    let y = lexer::diff_tokens(b);
    let mut prev: Vec<usize> = (0..=y.len()).collect();
    let mut cur = vec![0; y.len() + 1];
    for (i, xi) in x.iter().enumerate() {
        cur[0] = i + 1;
        for (j, yj) in y.iter().enumerate() {
            let sub = prev[j] + usize::from(xi != yj);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[y.len()]
}

/// True when `clone` has the same code-token sequence as `original` except
/// that identifiers may be renamed and literals replaced by literals of the
/// same kind.
pub fn same_shape_modulo_names(original: &str, clone: &str) -> bool {
    let strip = |s| {
        lexer::tokenize(s)
            .into_iter()
            .filter(|t| !t.kind.is_comment())
            .collect::<Vec<_>>()
    };
    let (a, b) = (strip(original), strip(clone));
    a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| {
            x.text == y.text
                || (x.kind == y.kind
                    && matches!(x.kind, TokenKind::Ident | TokenKind::Number | TokenKind::Str | TokenKind::Char))
        })
}

/// Generation prompt for a Type-2/3/4 clone.
pub fn clone_prompt(text: &str, language: Language, clone_type: CloneType, seed: u64) -> Result<String> {
    let (_, template) = clone_type
        .template()
        .ok_or_else(|| Error::InvalidConfig("Type-1 clones are not generated by a model".into()))?;
    let seed = seed.to_string();
    Ok(render_template(
        template,
        &[
            ("language", display_name(language)),
            ("fence", extension(language)),
            ("seed", &seed),
            ("code", text),
        ],
    ))
}

/// Contents of the first fenced code block, or the whole trimmed response
/// when there is none.
pub fn extract_code_block(response: &str) -> String {
    let Some(open) = response.find("```") else {
        return response.trim().to_string();
    };
    let after = &response[open + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    let end = body.find("```").unwrap_or(body.len());
    let code = &body[..end];
    code.strip_suffix('\n')
        .map(|c| c.strip_suffix('\r').unwrap_or(c))
        .unwrap_or(code)
        .to_string()
}

/// Asks `provider` for a Type-2/3/4 clone of `text`. Responses that do not
/// parse, that break the Type-2 shape, or that repeat one of `avoid` are
/// rejected and retried up to [`MAX_CLONE_RETRIES`] times.
pub fn gen_llm_clone(
    provider: &dyn LlmProvider,
    text: &str,
    language: Language,
    clone_type: CloneType,
    seed: u64,
    avoid: &[&str],
) -> Result<String> {
    let prompt = clone_prompt(text, language, clone_type, seed)?;
    let mut last = Error::UnparseableClone("no attempt made".into());
    // Origins the grammar only partly understands (K&R-style macros such as
    // `protected int`) may keep their error nodes in the clone.
    let origin_clean = corpus::function_parse_clean(text, language) != Some(false);
    for attempt in 0..=MAX_CLONE_RETRIES {
        let code = extract_code_block(&provider.complete(&prompt, attempt)?);
        let parsed = corpus::function_parse_clean(&code, language);
        if parsed.is_none() || (origin_clean && parsed == Some(false)) {
            last = Error::UnparseableClone(format!("{clone_type} clone, prompt {}", prompt_digest(&prompt)));
        } else if clone_type == CloneType::T2 && !same_shape_modulo_names(text, &code) {
            last = Error::RejectedClone(format!("{clone_type} clone changes more than names and literals"));
        } else if avoid.iter().any(|a| token_diff(a, &code) == 0) {
            last = Error::RejectedClone(format!("{clone_type} clone duplicates an earlier variant"));
        } else {
            return Ok(code);
        }
        log::warn!("attempt {attempt}: {last}");
    }
    Err(last)
}

/// Per-clone seed derived from the run seed and the clone's position.
pub fn derive_seed(seed: u64, pair_id: &str, side: OriginSide, clone_type: CloneType, variant: usize) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{pair_id}/{}/{clone_type}/{variant}", side.letter()).as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn clone_id(pair_id: &str, side: OriginSide, clone_type: CloneType, variant: usize) -> String {
    format!("{pair_id}-{}-{}-{variant}", side.letter(), clone_type.as_str().to_lowercase())
}

fn sides(pair: &FunctionPair) -> [(OriginSide, &FunctionRecord); 2] {
    [(OriginSide::Vulnerable, &pair.vulnerable), (OriginSide::Fixed, &pair.fixed)]
}

/// Every model prompt the benchmark needs on first attempt, with the id of
/// the clone it produces.
pub fn generation_prompts(pairs: &[FunctionPair], plan: &BenchPlan, seed: u64) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for pair in pairs {
        for (side, func) in sides(pair) {
            for t in [CloneType::T2, CloneType::T3, CloneType::T4] {
                for v in 0..plan.clones_per_function.count(t) {
                    let s = derive_seed(seed, pair.pair_id(), side, t, v);
                    out.push((clone_id(pair.pair_id(), side, t, v), clone_prompt(&func.text, func.language, t, s)?));
                }
            }
        }
    }
    Ok(out)
}

fn clones_for(
    pair: &FunctionPair,
    side: OriginSide,
    func: &FunctionRecord,
    plan: &ClonePlan,
    provider: &dyn LlmProvider,
    seed: u64,
) -> Result<Vec<CloneRecord>> {
    let mut out: Vec<CloneRecord> = Vec::with_capacity(plan.per_function());
    for t in CloneType::ALL {
        let mut texts: Vec<String> = Vec::new();
        for v in 0..plan.count(t) {
            let s = derive_seed(seed, pair.pair_id(), side, t, v);
            let text = match t {
                CloneType::T1 => gen_type1(&func.text, func.language, s)?,
                _ => {
                    let avoid: Vec<&str> = texts.iter().map(String::as_str).collect();
                    gen_llm_clone(provider, &func.text, func.language, t, s, &avoid)?
                }
            };
            out.push(CloneRecord {
                clone_id: clone_id(pair.pair_id(), side, t, v),
                origin_pair_id: pair.pair_id().to_string(),
                origin_side: side,
                clone_type: t,
                language: func.language,
                token_diff: token_diff(&func.text, &text),
                label: side == OriginSide::Vulnerable,
                text: text.clone(),
            });
            texts.push(text);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub clone_type: CloneType,
    pub clones: usize,
    pub positives: usize,
    pub negatives: usize,
    pub mean_token_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchStats {
    pub pairs: usize,
    pub by_type: Vec<TypeStats>,
    pub clones: usize,
    pub positives: usize,
    pub negatives: usize,
}

pub fn bench_stats(pairs: usize, clones: &[CloneRecord]) -> BenchStats {
    let by_type = CloneType::ALL
        .iter()
        .map(|&t| {
            let of: Vec<_> = clones.iter().filter(|c| c.clone_type == t).collect();
            let positives = of.iter().filter(|c| c.label).count();
            let diff: usize = of.iter().map(|c| c.token_diff).sum();
            TypeStats {
                clone_type: t,
                clones: of.len(),
                positives,
                negatives: of.len() - positives,
                mean_token_diff: if of.is_empty() { 0.0 } else { diff as f64 / of.len() as f64 },
            }
        })
        .collect();
    let positives = clones.iter().filter(|c| c.label).count();
    BenchStats {
        pairs,
        by_type,
        clones: clones.len(),
        positives,
        negatives: clones.len() - positives,
    }
}

pub fn stats_table(stats: &BenchStats) -> String {
    let mut out = String::from("| Clone type | Clones | Pos | Neg | Avg. token diff |\n|---|---:|---:|---:|---:|\n");
    for t in &stats.by_type {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.2} |",
            t.clone_type, t.clones, t.positives, t.negatives, t.mean_token_diff
        );
    }
    let _ = writeln!(out, "| Total | {} | {} | {} | - |", stats.clones, stats.positives, stats.negatives);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub clones: Vec<CloneRecord>,
    pub stats: BenchStats,
}

/// Generates the full clone plan for both sides of every pair. Jobs run
/// with at most `max_in_flight` in parallel; output order follows `pairs`.
/// Replay misses from all jobs are reported together.
pub fn assemble_benchmark(
    pairs: &[FunctionPair],
    plan: &BenchPlan,
    provider: &dyn LlmProvider,
    seed: u64,
    max_in_flight: usize,
) -> Result<Benchmark> {
    plan.validate()?;
    let jobs: Vec<(&FunctionPair, OriginSide, &FunctionRecord)> =
        pairs.iter().flat_map(|p| sides(p).map(|(s, f)| (p, s, f))).collect();
    let results = http::bounded_map(jobs.len(), max_in_flight, |i| {
        let (pair, side, func) = jobs[i];
        clones_for(pair, side, func, &plan.clones_per_function, provider, seed)
    });
    let mut clones = Vec::with_capacity(plan.total_clones(pairs.len()));
    let mut misses = Vec::new();
    for r in results {
        match r {
            Ok(mut c) => clones.append(&mut c),
            Err(Error::FixtureMiss(mut d)) => misses.append(&mut d),
            Err(e) => return Err(e),
        }
    }
    if !misses.is_empty() {
        misses.sort();
        misses.dedup();
        return Err(Error::FixtureMiss(misses));
    }
    let stats = bench_stats(pairs.len(), &clones);
    Ok(Benchmark { clones, stats })
}

/// Ground truth for retrieval: each pair's query is answered by the clones
/// of its vulnerable function.
pub fn ground_truth(pairs: &[FunctionPair], clones: &[CloneRecord]) -> Vec<EvalQuery> {
    pairs
        .iter()
        .map(|p| EvalQuery {
            query_id: p.pair_id().to_string(),
            ground_truth: clones
                .iter()
                .filter(|c| c.label && c.origin_pair_id == p.pair_id())
                .map(|c| c.clone_id.clone())
                .collect::<BTreeSet<_>>(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub seed: u64,
    pub plan: BenchPlan,
    pub generator: String,
    pub template_version: String,
    pub pairs: usize,
    pub clones: usize,
}

/// Writes clones.jsonl, pairs.jsonl, truth.jsonl, stats.json, manifest.json
/// and the generation templates under prompts/.
pub fn write_archive(dir: &Path, pairs: &[FunctionPair], bench: &Benchmark, manifest: &BenchManifest) -> Result<()> {
    let prompts = dir.join("prompts");
    std::fs::create_dir_all(&prompts).map_err(|e| Error::io(&prompts, e))?;
    jsonl::write(&dir.join("clones.jsonl"), &bench.clones)?;
    jsonl::write(&dir.join("pairs.jsonl"), pairs)?;
    jsonl::write(&dir.join("truth.jsonl"), &ground_truth(pairs, &bench.clones))?;
    jsonl::write_json(&dir.join("stats.json"), &bench.stats)?;
    jsonl::write_json(&dir.join("manifest.json"), manifest)?;
    for t in CloneType::ALL {
        if let Some((name, body)) = t.template() {
            jsonl::write_atomic(&prompts.join(name), body.as_bytes())?;
        }
    }
    Ok(())
}

/// Markdown review sheet for a seeded sample of `n` clones.
pub fn audit_sheet(clones: &[CloneRecord], pairs: &[FunctionPair], n: usize, seed: u64) -> String {
    let mut picked: Vec<&CloneRecord> = clones.iter().collect();
    picked.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    picked.truncate(n);
    let mut out = format!("# Clone audit ({} of {} clones, seed {seed})\n", picked.len(), clones.len());
    for c in picked {
        let origin = pairs.iter().find(|p| p.pair_id() == c.origin_pair_id).map(|p| match c.origin_side {
            OriginSide::Vulnerable => &p.vulnerable,
            OriginSide::Fixed => &p.fixed,
        });
        let fence = extension(c.language);
        let _ = write!(
            out,
            "\n## {}\n\ntype {}, {} side, label {}, token diff {}\n\n",
            c.clone_id,
            c.clone_type,
            c.origin_side.letter(),
            c.label,
            c.token_diff
        );
        if let Some(o) = origin {
            let _ = write!(out, "Origin:\n\n```{fence}\n{}\n```\n\n", o.text);
        }
        let _ = write!(
            out,
            "Clone:\n\n```{fence}\n{}\n```\n\n- [ ] true clone of the stated type\n- [ ] vulnerability status unchanged\n",
            c.text
        );
    }
    out
}
