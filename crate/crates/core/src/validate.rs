//! Language-model confirmation of candidate clones.
//!
//! A candidate is rendered into a fixed prompt together with the known
//! vulnerable function and its patch. The model's answer is pulled out of
//! free text in four escalating steps (strict parse, escape repair, field
//! regexes, failure), and repeated runs are merged by majority vote.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::http::{self, RetryPolicy};

pub const PROMPT_TEMPLATE: &str = include_str!("../templates/validation_prompt.txt");
pub const JSON_START_MARKER: &str = "=== JSON RESPONSE ===";
pub const JSON_END_MARKER: &str = "=== END JSON ===";
pub const PROMPT_TOO_LARGE: &str = "PROMPT_TOO_LARGE";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRequest {
    pub entry_id: String,
    pub target_id: String,
    pub original_function: String,
    pub fixed_function: String,
    pub cloned_function: String,
}

impl ValidationRequest {
    fn check(&self) -> Result<()> {
        for (name, text) in [
            ("original_function", &self.original_function),
            ("fixed_function", &self.fixed_function),
            ("cloned_function", &self.cloned_function),
        ] {
            if text.trim().is_empty() {
                return Err(Error::Contract(format!(
                    "validation request {}/{} has an empty {name}",
                    self.entry_id, self.target_id
                )));
            }
        }
        Ok(())
    }

    fn combined_chars(&self) -> usize {
        self.original_function.chars().count()
            + self.fixed_function.chars().count()
            + self.cloned_function.chars().count()
    }
}

/// Substitutes the three functions into a `str.format`-style template:
/// `{name}` is a slot, `{{` and `}}` are literal braces. Slot contents are
/// inserted verbatim.
pub fn render_template(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + slots.iter().map(|s| s.1.len()).sum::<usize>());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        if rest.starts_with("{{") {
            out.push('{');
            rest = &rest[2..];
        } else if rest.starts_with("}}") {
            out.push('}');
            rest = &rest[2..];
        } else if let Some((name, value)) = rest
            .strip_prefix('{')
            .and_then(|r| r.find('}').map(|end| &r[..end]))
            .and_then(|name| slots.iter().find(|(k, _)| *k == name))
        {
            out.push_str(value);
            rest = &rest[name.len() + 2..];
        } else {
            out.push_str(&rest[..1]);
            rest = &rest[1..];
        }
    }
    out.push_str(rest);
    out
}

pub fn render_prompt(req: &ValidationRequest) -> Result<String> {
    req.check()?;
    Ok(render_template(
        PROMPT_TEMPLATE,
        &[
            ("original_function", &req.original_function),
            ("fixed_function", &req.fixed_function),
            ("cloned_function", &req.cloned_function),
        ],
    ))
}

/// Content address of a prompt, used as the replay fixture key.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ParseStatus {
    Clean,
    Repaired,
    Fallback,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub is_vulnerable: bool,
    /// 1..=5; 0 only for FAILED verdicts.
    pub confidence_level: u8,
    pub justification: String,
    pub parse_status: ParseStatus,
    pub raw_response: String,
}

impl ValidationVerdict {
    pub fn failed(raw_response: impl Into<String>, justification: impl Into<String>) -> Self {
        ValidationVerdict {
            is_vulnerable: false,
            confidence_level: 0,
            justification: justification.into(),
            parse_status: ParseStatus::Failed,
            raw_response: raw_response.into(),
        }
    }

    /// Vulnerable and parsed; FAILED verdicts never count as vulnerable.
    pub fn confirms(&self) -> bool {
        self.parse_status != ParseStatus::Failed && self.is_vulnerable
    }
}

/// Doubles every backslash that does not start a valid JSON escape.
pub fn repair_escapes(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.peek() {
            Some(&n @ ('"' | '\\' | '/' | 'b' | 'f' | 'n' | 'r' | 't' | 'u')) => {
                out.push('\\');
                out.push(n);
                chars.next();
            }
            _ => out.push_str("\\\\"),
        }
    }
    out
}

/// The JSON payload of a response: the text between the response markers
/// when both are present, otherwise the first balanced `{...}` block.
pub fn extract_json_block(response: &str) -> Option<&str> {
    if let (Some(s), Some(e)) = (response.find(JSON_START_MARKER), response.rfind(JSON_END_MARKER)) {
        let inner = &response[s + JSON_START_MARKER.len()..e.max(s + JSON_START_MARKER.len())];
        if inner.contains('{') {
            return Some(inner.trim());
        }
    }
    first_balanced_object(response)
}

fn first_balanced_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    // unbalanced: hand the tail to the later stages
    Some(&text[start..])
}

fn verdict_from_value(v: &Value) -> Option<(bool, u8, String)> {
    let obj = v.as_object()?;
    let is_vulnerable = obj.get("is_vulnerable")?.as_bool()?;
    let conf = obj.get("confidence_level")?;
    let conf = conf
        .as_u64()
        .or_else(|| conf.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as u64))
        .or_else(|| conf.as_str().and_then(|s| s.trim().parse().ok()))?;
    if !(1..=5).contains(&conf) {
        return None;
    }
    let justification = obj
        .get("justification")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    Some((is_vulnerable, conf as u8, justification))
}

fn field_regexes() -> &'static (Regex, Regex, Regex) {
    static RE: OnceLock<(Regex, Regex, Regex)> = OnceLock::new();
    RE.get_or_init(|| {
        (
            Regex::new(r#""is_vulnerable"\s*:\s*"?(true|false)"?"#).expect("valid regex"),
            Regex::new(r#""confidence_level"\s*:\s*"?([0-9]+)"?"#).expect("valid regex"),
            Regex::new(r#"(?s)"justification"\s*:\s*"(.*?)"\s*[,}]"#).expect("valid regex"),
        )
    })
}

/// Parses a model response. Never fails; the outcome is in `parse_status`.
pub fn extract_verdict(response: &str) -> ValidationVerdict {
    let Some(block) = extract_json_block(response) else {
        return ValidationVerdict::failed(response, "no JSON object in response");
    };
    let build = |(is_vulnerable, confidence_level, justification): (bool, u8, String), status| {
        ValidationVerdict {
            is_vulnerable,
            confidence_level,
            justification,
            parse_status: status,
            raw_response: response.to_string(),
        }
    };
    if let Some(fields) = serde_json::from_str::<Value>(block).ok().as_ref().and_then(verdict_from_value) {
        return build(fields, ParseStatus::Clean);
    }
    let repaired = repair_escapes(block);
    if let Some(fields) = serde_json::from_str::<Value>(&repaired).ok().as_ref().and_then(verdict_from_value) {
        return build(fields, ParseStatus::Repaired);
    }
    let (vuln_re, conf_re, just_re) = field_regexes();
    let vuln = vuln_re.captures(block).map(|c| &c[1] == "true");
    let conf = conf_re
        .captures(block)
        .and_then(|c| c[1].parse::<u8>().ok())
        .filter(|c| (1..=5).contains(c));
    if let (Some(v), Some(c)) = (vuln, conf) {
        let justification = just_re
            .captures(block)
            .map(|m| m[1].to_string())
            .unwrap_or_default();
        return build((v, c, justification), ParseStatus::Fallback);
    }
    ValidationVerdict::failed(response, "response did not contain a readable verdict")
}

/// A completion backend. `run` distinguishes repeated calls with the same
/// prompt; deterministic backends may use it to pick among recorded runs.
pub trait LlmProvider: Sync {
    fn complete(&self, prompt: &str, run: usize) -> Result<String>;
    fn fingerprint(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LlmProviderKind {
    Remote,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmProviderConfig {
    pub kind: LlmProviderKind,
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub fixture_path: Option<String>,
    pub temperature: f64,
    pub runs: usize,
    pub max_in_flight: usize,
    pub max_prompt_chars: usize,
    pub retry: RetryPolicy,
}

impl Default for LlmProviderConfig {
    fn default() -> Self {
        LlmProviderConfig {
            kind: LlmProviderKind::Replay,
            endpoint_url: String::new(),
            model_name: String::new(),
            api_key_env: "LLM_API_KEY".into(),
            fixture_path: None,
            temperature: 0.0,
            runs: 1,
            max_in_flight: 4,
            max_prompt_chars: 24_000,
            retry: RetryPolicy::default(),
        }
    }
}

impl LlmProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperature != 0.0 {
            return Err(Error::InvalidConfig("llm.temperature must be 0.0".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("llm.runs must be positive".into()));
        }
        match self.kind {
            LlmProviderKind::Replay if self.fixture_path.is_none() => Err(Error::InvalidConfig(
                "replay provider needs llm.fixture_path".into(),
            )),
            LlmProviderKind::Remote if self.endpoint_url.is_empty() || self.model_name.is_empty() => Err(
                Error::InvalidConfig("remote llm needs endpoint_url and model_name".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// One line of a replay fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub prompt_digest: String,
    pub response_text: String,
}

/// Content-addressed recorded responses. Several entries with the same
/// digest are served to successive runs in file order.
#[derive(Debug, Clone, Default)]
pub struct ReplayProvider {
    responses: HashMap<String, Vec<String>>,
    fingerprint: String,
}

impl ReplayProvider {
    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut responses: HashMap<String, Vec<String>> = HashMap::new();
        let mut h = Sha256::new();
        for e in entries {
            h.update(e.prompt_digest.as_bytes());
            h.update(e.response_text.as_bytes());
            responses.entry(e.prompt_digest).or_default().push(e.response_text);
        }
        ReplayProvider {
            responses,
            fingerprint: format!("replay/{}", &hex::encode(h.finalize())[..16]),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_entries(crate::jsonl::read::<ReplayEntry>(path)?))
    }

    pub fn contains(&self, prompt: &str) -> bool {
        self.responses.contains_key(&prompt_digest(prompt))
    }
}

impl LlmProvider for ReplayProvider {
    fn complete(&self, prompt: &str, run: usize) -> Result<String> {
        let digest = prompt_digest(prompt);
        match self.responses.get(&digest) {
            Some(list) => Ok(list[run % list.len()].clone()),
            None => Err(Error::FixtureMiss(vec![digest])),
        }
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}

/// Chat-style JSON-over-HTTP model.
#[derive(Debug, Clone)]
pub struct RemoteLlm {
    endpoint_url: String,
    model_name: String,
    api_key: String,
    retry: RetryPolicy,
}

impl RemoteLlm {
    pub fn new(config: &LlmProviderConfig) -> Result<Self> {
        let api_key = http::api_key(&config.api_key_env)?;
        Ok(RemoteLlm {
            endpoint_url: config.endpoint_url.clone(),
            model_name: config.model_name.clone(),
            api_key,
            retry: config.retry,
        })
    }
}

/// First text part of a chat response: `content[].text` or
/// `choices[0].message.content`.
pub fn response_text(v: &Value) -> Option<String> {
    if let Some(parts) = v.get("content").and_then(Value::as_array) {
        return parts
            .iter()
            .find(|p| p.get("type").and_then(Value::as_str).is_none_or(|t| t == "text"))
            .and_then(|p| p.get("text"))
            .and_then(Value::as_str)
            .map(str::to_string);
    }
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl LlmProvider for RemoteLlm {
    fn complete(&self, prompt: &str, _run: usize) -> Result<String> {
        let body = json!({
            "model": self.model_name,
            "temperature": 0.0,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let resp = http::post_json(&self.endpoint_url, &self.api_key, &body, self.retry)?;
        response_text(&resp)
            .ok_or_else(|| Error::ProviderUnavailable("response has no text part".into()))
    }

    fn fingerprint(&self) -> String {
        format!("remote/{}@{}", self.model_name, self.endpoint_url)
    }
}

pub fn provider_from_config(config: &LlmProviderConfig, base: &Path) -> Result<Box<dyn LlmProvider>> {
    config.validate()?;
    Ok(match config.kind {
        LlmProviderKind::Replay => {
            let rel = config.fixture_path.as_deref().expect("validated");
            Box::new(ReplayProvider::load(&base.join(rel))?)
        }
        LlmProviderKind::Remote => Box::new(RemoteLlm::new(config)?),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub runs: usize,
    pub max_prompt_chars: usize,
}

impl From<&LlmProviderConfig> for ValidateOptions {
    fn from(c: &LlmProviderConfig) -> Self {
        ValidateOptions {
            runs: c.runs,
            max_prompt_chars: c.max_prompt_chars,
        }
    }
}

/// Aggregate verdict of one candidate plus the per-run verdicts it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateValidation {
    pub verdict: ValidationVerdict,
    pub runs: Vec<ValidationVerdict>,
}

/// Majority vote over parsed runs (ties count as vulnerable), lower median
/// confidence, justification from the first run agreeing with the majority.
pub fn aggregate(runs: &[ValidationVerdict]) -> ValidationVerdict {
    let parsed: Vec<&ValidationVerdict> = runs
        .iter()
        .filter(|r| r.parse_status != ParseStatus::Failed)
        .collect();
    if parsed.is_empty() {
        return runs
            .first()
            .cloned()
            .unwrap_or_else(|| ValidationVerdict::failed("", "no runs"));
    }
    let yes = parsed.iter().filter(|r| r.is_vulnerable).count();
    let majority = yes * 2 >= parsed.len();
    let mut conf: Vec<u8> = parsed.iter().map(|r| r.confidence_level).collect();
    conf.sort_unstable();
    let source = parsed
        .iter()
        .find(|r| r.is_vulnerable == majority)
        .expect("majority side is non-empty");
    ValidationVerdict {
        is_vulnerable: majority,
        confidence_level: conf[(conf.len() - 1) / 2],
        justification: source.justification.clone(),
        parse_status: source.parse_status,
        raw_response: source.raw_response.clone(),
    }
}

pub fn validate_candidate(
    provider: &dyn LlmProvider,
    req: &ValidationRequest,
    opts: ValidateOptions,
) -> Result<CandidateValidation> {
    req.check()?;
    if req.combined_chars() > opts.max_prompt_chars {
        let v = ValidationVerdict::failed("", PROMPT_TOO_LARGE);
        return Ok(CandidateValidation {
            verdict: v.clone(),
            runs: vec![v],
        });
    }
    let prompt = render_prompt(req)?;
    let mut runs = Vec::with_capacity(opts.runs);
    for run in 0..opts.runs.max(1) {
        runs.push(extract_verdict(&provider.complete(&prompt, run)?));
    }
    Ok(CandidateValidation {
        verdict: aggregate(&runs),
        runs,
    })
}

/// Validates many candidates with at most `max_in_flight` concurrent
/// requests. Replay misses across all candidates are reported together.
pub fn validate_all(
    provider: &dyn LlmProvider,
    requests: &[ValidationRequest],
    opts: ValidateOptions,
    max_in_flight: usize,
) -> Result<Vec<CandidateValidation>> {
    let results = http::bounded_map(requests.len(), max_in_flight, |i| {
        validate_candidate(provider, &requests[i], opts)
    });
    let mut misses = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err(Error::FixtureMiss(mut d)) => misses.append(&mut d),
            Err(e) => return Err(e),
        }
    }
    if !misses.is_empty() {
        misses.sort();
        misses.dedup();
        return Err(Error::FixtureMiss(misses));
    }
    Ok(out)
}

/// Fixture line answering `prompt` with `response_text`.
pub fn replay_entry(prompt: &str, response_text: &str) -> ReplayEntry {
    ReplayEntry {
        prompt_digest: prompt_digest(prompt),
        response_text: response_text.to_string(),
    }
}
