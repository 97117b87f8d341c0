//! Function extraction from C, C++ and Java repositories, plus the
//! manifest and length filters applied before retrieval.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tree_sitter::{Node, Parser, Tree};
use walkdir::WalkDir;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Language {
    C,
    Cpp,
    Java,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::C, Language::Cpp, Language::Java];

    /// Maps a file extension (without the dot) to a language.
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext {
            "c" | "h" => Some(Language::C),
            "cc" | "cpp" | "cxx" | "hpp" => Some(Language::Cpp),
            "java" => Some(Language::Java),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Language::C => "C",
            Language::Cpp => "CPP",
            Language::Java => "JAVA",
        }
    }

    pub(crate) fn grammar(self) -> tree_sitter::Language {
        match self {
            Language::C => tree_sitter_c::LANGUAGE.into(),
            Language::Cpp => tree_sitter_cpp::LANGUAGE.into(),
            Language::Java => tree_sitter_java::LANGUAGE.into(),
        }
    }

    fn is_function_node(self, node: &Node) -> bool {
        match self {
            Language::C | Language::Cpp => node.kind() == "function_definition",
            Language::Java => {
                matches!(
                    node.kind(),
                    "method_declaration" | "constructor_declaration" | "compact_constructor_declaration"
                ) && node.child_by_field_name("body").is_some()
            }
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Language::C),
            "cpp" | "c++" | "cxx" => Ok(Language::Cpp),
            "java" => Ok(Language::Java),
            other => Err(Error::UnsupportedLanguage(other.to_string())),
        }
    }
}

/// One extracted function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub id: String,
    pub repo: String,
    pub path: String,
    pub language: Language,
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
}

impl FunctionRecord {
    pub fn new(repo: &str, path: &str, language: Language, parsed: ParsedFunction) -> Self {
        FunctionRecord {
            id: record_id(repo, path, parsed.start_line, parsed.end_line),
            repo: repo.to_string(),
            path: path.to_string(),
            language,
            name: parsed.name,
            start_line: parsed.start_line,
            end_line: parsed.end_line,
            text: parsed.text,
        }
    }

    pub fn line_count(&self) -> usize {
        self.end_line + 1 - self.start_line
    }
}

/// Stable identity of a function: digest over repo slug, path and line span.
pub fn record_id(repo: &str, path: &str, start_line: usize, end_line: usize) -> String {
    let mut h = Sha256::new();
    h.update(repo.as_bytes());
    h.update([0]);
    h.update(path.as_bytes());
    h.update([0]);
    h.update(format!("{start_line}:{end_line}").as_bytes());
    hex::encode(&h.finalize()[..16])
}

/// A function located in a single source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFunction {
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
}

/// Parses `text` with the language grammar. Fails only when no tree can be
/// produced at all; error nodes inside the tree are tolerated.
pub fn parse_tree(text: &str, language: Language) -> Result<Tree> {
    let mut parser = Parser::new();
    parser
        .set_language(&language.grammar())
        .map_err(|e| Error::ParseFailure(e.to_string()))?;
    parser
        .parse(text, None)
        .ok_or_else(|| Error::ParseFailure(format!("{language} grammar produced no tree")))
}

/// `None` when `text` holds no function definition, otherwise whether the
/// first one parses without syntax errors.
pub fn function_parse_clean(text: &str, language: Language) -> Option<bool> {
    let tree = parse_tree(text, language).ok()?;
    function_nodes(tree.root_node(), language).first().map(|n| !n.has_error())
}

/// True when `text` holds at least one function definition and the first
/// one parses without syntax errors.
pub fn parses_as_function(text: &str, language: Language) -> bool {
    function_parse_clean(text, language) == Some(true)
}

/// Every function or method definition with a body, in source order.
pub fn parse_functions(text: &str, language: Language) -> Result<Vec<ParsedFunction>> {
    let tree = parse_tree(text, language)?;
    let lines = LineIndex::new(text);
    let mut out = Vec::new();
    for node in function_nodes(tree.root_node(), language) {
        let start_line = node.start_position().row + 1;
        let end_line = node.end_position().row + 1;
        out.push(ParsedFunction {
            name: function_name(&node, text, language),
            start_line,
            end_line,
            text: lines.slice(text, start_line, end_line).to_string(),
        });
    }
    Ok(out)
}

/// Function nodes below `root` in pre-order. C/C++ definitions are not
/// searched for nested definitions; Java method bodies are, so that methods
/// of local and anonymous classes are found.
pub(crate) fn function_nodes<'t>(root: Node<'t>, language: Language) -> Vec<Node<'t>> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        let is_fn = language.is_function_node(&node);
        if is_fn {
            out.push(node);
            if language != Language::Java {
                continue;
            }
        }
        let mut cursor = node.walk();
        let children: Vec<_> = node.children(&mut cursor).collect();
        stack.extend(children.into_iter().rev());
    }
    out
}

fn function_name(node: &Node, src: &str, language: Language) -> String {
    let text = |n: Node| src[n.byte_range()].to_string();
    if language == Language::Java {
        return node.child_by_field_name("name").map(text).unwrap_or_default();
    }
    let mut decl = node.child_by_field_name("declarator");
    while let Some(d) = decl {
        if d.kind() == "function_declarator" {
            return d.child_by_field_name("declarator").map(text).unwrap_or_default();
        }
        decl = d
            .child_by_field_name("declarator")
            .or_else(|| d.named_child(0).filter(|c| c.kind().ends_with("declarator")));
    }
    String::new()
}

/// Byte offsets of line starts, for slicing whole lines.
pub(crate) struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub(crate) fn new(text: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    /// Lines `start..=end` (1-based) without the final line terminator.
    pub(crate) fn slice<'a>(&self, text: &'a str, start: usize, end: usize) -> &'a str {
        let from = self.starts[start - 1];
        let to = self.starts.get(end).map_or(text.len(), |&next| next - 1);
        let s = &text[from..to.max(from)];
        s.strip_suffix('\r').unwrap_or(s)
    }
}

/// Re-reads the span `start_line..=end_line` of `source` exactly as
/// [`parse_functions`] stores it.
pub fn relocate(source: &str, start_line: usize, end_line: usize) -> Option<&str> {
    let idx = LineIndex::new(source);
    (start_line >= 1 && start_line <= end_line && end_line <= idx.starts.len())
        .then(|| idx.slice(source, start_line, end_line))
}

/// Decodes file bytes, replacing invalid UTF-8 sequences with U+FFFD.
pub fn decode_source(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<FunctionRecord>,
    pub skipped: Vec<SkippedFile>,
}

/// Walks `root` and extracts functions from every file whose extension maps
/// to one of `languages`. Unreadable files are logged and skipped.
pub fn ingest_repository(root: &Path, repo: &str, languages: &HashSet<Language>) -> Result<Ingested> {
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                log::warn!("skipping unreadable entry: {e}");
                continue;
            }
        };
        if entry.file_type().is_dir() {
            continue;
        }
        let Some(lang) = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .and_then(Language::from_extension)
        else {
            continue;
        };
        if languages.contains(&lang) {
            let rel = entry
                .path()
                .strip_prefix(root)
                .expect("walkdir yields paths under root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            files.push((entry.into_path(), rel, lang));
        }
    }

    let results: Vec<_> = files
        .par_iter()
        .map(|(path, rel, lang)| {
            let bytes = fs::read(path).map_err(|e| e.to_string())?;
            let text = decode_source(&bytes);
            let parsed = parse_functions(&text, *lang).map_err(|e| e.to_string())?;
            Ok::<_, String>(
                parsed
                    .into_iter()
                    .map(|p| FunctionRecord::new(repo, rel, *lang, p))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();

    let mut out = Ingested::default();
    for ((path, _, _), res) in files.into_iter().zip(results) {
        match res {
            Ok(mut recs) => out.records.append(&mut recs),
            Err(reason) => {
                log::warn!("skipping {}: {reason}", path.display());
                out.skipped.push(SkippedFile { path, reason });
            }
        }
    }
    out.records
        .sort_by(|a, b| a.path.cmp(&b.path).then(a.start_line.cmp(&b.start_line)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepoManifestEntry {
    pub slug: String,
    pub clone_url: String,
    pub language: Language,
    pub months_since_last_commit: f64,
    pub pr_merge_rate: f64,
    pub stars: u64,
}

pub const DEFAULT_MAX_MONTHS: f64 = 10.0;
pub const DEFAULT_MIN_MERGE_RATE: f64 = 0.10;

/// Keeps repositories active within `max_months` whose merge rate is
/// strictly above `min_merge_rate`.
pub fn filter_manifest(
    entries: &[RepoManifestEntry],
    max_months: f64,
    min_merge_rate: f64,
) -> Vec<RepoManifestEntry> {
    entries
        .iter()
        .filter(|e| e.months_since_last_commit <= max_months && e.pr_merge_rate > min_merge_rate)
        .cloned()
        .collect()
}

/// A vulnerable function and its patched counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionPair {
    pub vulnerable: FunctionRecord,
    pub fixed: FunctionRecord,
    pub cve_id: String,
    pub cwe_id: String,
}

impl FunctionPair {
    pub fn pair_id(&self) -> &str {
        &self.vulnerable.id
    }
}

/// Nearest-rank percentile of an ascending slice, `pct` in 0..=100.
pub fn nearest_rank(sorted: &[usize], pct: f64) -> usize {
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Drops pairs whose vulnerable function is shorter than the `low_pct`
/// percentile or longer than the `100 - high_pct` percentile of line counts.
pub fn filter_by_length_percentile(
    pairs: &[FunctionPair],
    low_pct: f64,
    high_pct: f64,
) -> Result<Vec<FunctionPair>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no function pairs to filter"));
    }
    let mut counts: Vec<usize> = pairs.iter().map(|p| p.vulnerable.line_count()).collect();
    counts.sort_unstable();
    let lo = nearest_rank(&counts, low_pct);
    let hi = nearest_rank(&counts, 100.0 - high_pct);
    Ok(pairs
        .iter()
        .filter(|p| (lo..=hi).contains(&p.vulnerable.line_count()))
        .cloned()
        .collect())
}
