//! Dataset and response ingestion, code extraction, and corpus evaluation.
//!
//! Dataset records are `{id, api, question, origin}`; responses are
//! line-delimited `{id, response, meta?}`. A response's code is taken from
//! fenced blocks, else from the configured answer-tag section, else from the
//! raw text when it looks like bare code. The first block that parses
//! decides the sample.

mod metrics;
mod report;

pub use metrics::{
    bucket_of, compute_metrics, metrics_from_counts, ApiCounters, Bucket, EmptyResults,
    EvalMetrics, Rat,
};
pub use report::{emit_report, Report, ReportFormat};

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{tokenize, TokenKind};
use crate::rules::{check_snippet, ApiTarget, CheckVerdict, RuleRegistry, VerdictStatus};

/// Default marker for the answer section in templated responses.
pub const DEFAULT_ANSWER_TAG: &str = "### Answer";

/// One benchmark question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    /// Target API as `Class.method`.
    pub api: String,
    /// Title plus description text.
    pub question: String,
    /// Source URL.
    pub origin: String,
}

impl CorpusEntry {
    pub fn target(&self) -> Result<ApiTarget, CorpusError> {
        self.api.parse().map_err(|e: String| CorpusError::Schema {
            context: format!("record `{}`", self.id),
            message: e,
        })
    }
}

/// One model answer, keyed to a dataset entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub id: String,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

/// Verdict for one sample plus which code block produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub id: String,
    pub api: String,
    pub verdict: CheckVerdict,
    pub code_block_used: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error in {context}: {message}")]
    Schema { context: String, message: String },
    #[error("response id `{id}` does not match any dataset entry")]
    IdMismatch { id: String },
    #[error(transparent)]
    Empty(#[from] EmptyResults),
}

fn read_file(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

// Raw record shells that tolerate unknown fields so we can warn instead of
// failing on them.
#[derive(Deserialize)]
struct RawEntry {
    id: serde_json::Value,
    api: String,
    question: String,
    origin: String,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

fn id_to_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl RawEntry {
    fn into_entry(self, context: &str) -> Result<CorpusEntry, CorpusError> {
        if !self.extra.is_empty() {
            let keys: Vec<&str> = self.extra.keys().map(String::as_str).collect();
            log::warn!("{context}: ignoring unknown fields: {}", keys.join(", "));
        }
        let entry = CorpusEntry {
            id: id_to_string(&self.id),
            api: self.api,
            question: self.question,
            origin: self.origin,
        };
        entry.target()?;
        Ok(entry)
    }
}

/// Load a dataset file: either one JSON array or line-delimited records.
pub fn load_dataset(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let text = read_file(path)?;
    parse_dataset(&text)
}

/// Parse dataset text; used directly by tests and embedded data.
pub fn parse_dataset(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let trimmed = text.trim_start();
    let mut entries = Vec::new();
    if trimmed.starts_with('[') {
        let raws: Vec<RawEntry> =
            serde_json::from_str(trimmed).map_err(|e| CorpusError::Schema {
                context: "dataset array".to_string(),
                message: e.to_string(),
            })?;
        for (idx, raw) in raws.into_iter().enumerate() {
            entries.push(raw.into_entry(&format!("record #{idx}"))?);
        }
    } else {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let raw: RawEntry = serde_json::from_str(line).map_err(|e| CorpusError::Schema {
                context: format!("dataset line {}", lineno + 1),
                message: e.to_string(),
            })?;
            entries.push(raw.into_entry(&format!("dataset line {}", lineno + 1))?);
        }
    }
    let mut seen = BTreeSet::new();
    for e in &entries {
        if !seen.insert(e.id.clone()) {
            return Err(CorpusError::Schema {
                context: format!("record `{}`", e.id),
                message: "duplicate id".to_string(),
            });
        }
    }
    Ok(entries)
}

/// Load line-delimited `{id, response, meta?}` records.
pub fn load_responses(path: &Path) -> Result<Vec<ResponseRecord>, CorpusError> {
    let text = read_file(path)?;
    parse_responses(&text)
}

pub fn parse_responses(text: &str) -> Result<Vec<ResponseRecord>, CorpusError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| CorpusError::Schema {
            context: "responses array".to_string(),
            message: e.to_string(),
        });
    }
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: ResponseRecord = serde_json::from_str(line).map_err(|e| CorpusError::Schema {
            context: format!("responses line {}", lineno + 1),
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

/// Pull code out of a model response: fenced blocks first, then the answer
/// tag section, then the whole text when it already looks like bare code.
pub fn extract_code_blocks(response: &str) -> Vec<String> {
    extract_code_blocks_with(response, Some(DEFAULT_ANSWER_TAG))
}

pub fn extract_code_blocks_with(response: &str, answer_tag: Option<&str>) -> Vec<String> {
    let fenced = extract_fenced(response);
    if !fenced.is_empty() {
        return fenced;
    }
    if let Some(tag) = answer_tag {
        let tagged = extract_tagged_sections(response, tag);
        if !tagged.is_empty() {
            return tagged;
        }
    }
    if looks_like_bare_code(response) {
        return vec![response.trim().to_string()];
    }
    Vec::new()
}

fn extract_fenced(response: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in response.lines() {
        let t = line.trim_start();
        if t.starts_with("```") {
            match current.take() {
                Some(lines) => {
                    let body = lines.join("\n");
                    if !body.trim().is_empty() {
                        blocks.push(body.trim().to_string());
                    }
                }
                None => current = Some(Vec::new()),
            }
        } else if let Some(lines) = current.as_mut() {
            lines.push(line);
        }
    }
    // A fence the model forgot to close still counts.
    if let Some(lines) = current {
        let body = lines.join("\n");
        if !body.trim().is_empty() {
            blocks.push(body.trim().to_string());
        }
    }
    blocks
}

fn extract_tagged_sections(response: &str, tag: &str) -> Vec<String> {
    let mut sections = Vec::new();
    let mut collecting = false;
    let mut current = Vec::new();
    for line in response.lines() {
        let t = line.trim();
        if t == tag {
            if collecting && !current.is_empty() {
                sections.push(current.join("\n").trim().to_string());
                current.clear();
            }
            collecting = true;
            continue;
        }
        if collecting {
            // A new markdown heading ends the answer section.
            if t.starts_with("###") {
                sections.push(current.join("\n").trim().to_string());
                current.clear();
                collecting = false;
                continue;
            }
            current.push(line);
        }
    }
    if collecting && !current.is_empty() {
        sections.push(current.join("\n").trim().to_string());
    }
    sections.retain(|s| !s.is_empty());
    sections
}

fn looks_like_bare_code(response: &str) -> bool {
    let Some(first_line) = response.lines().find(|l| !l.trim().is_empty()) else {
        return false;
    };
    let Ok(tokens) = tokenize(first_line) else {
        return false;
    };
    if tokens.is_empty() || tokens.iter().any(|t| matches!(t.kind, TokenKind::Error(_))) {
        return false;
    }
    tokens
        .iter()
        .any(|t| matches!(t.kind, TokenKind::Punct(";") | TokenKind::Punct("{")))
}

/// Check one response against its entry's API. The first block that parses
/// decides; a sample with no parsing block is non-parsable.
pub fn evaluate_response(
    entry: &CorpusEntry,
    record: &ResponseRecord,
    registry: &RuleRegistry,
) -> Result<SampleResult, CorpusError> {
    if entry.id != record.id {
        return Err(CorpusError::IdMismatch { id: record.id.clone() });
    }
    let target = entry.target()?;
    let mut outcome: Option<(usize, CheckVerdict)> = None;
    for (idx, block) in extract_code_blocks(&record.response).into_iter().enumerate() {
        let verdict = check_snippet(&block, registry, &target);
        if verdict.status != VerdictStatus::NonParsable {
            outcome = Some((idx, verdict));
            break;
        }
    }
    let (code_block_used, verdict) = match outcome {
        Some((idx, v)) => (Some(idx), v),
        None => (
            None,
            CheckVerdict {
                status: VerdictStatus::NonParsable,
                best_rule: None,
                matched_len: 0,
                missing_items: Vec::new(),
                alignment: Vec::new(),
            },
        ),
    };
    Ok(SampleResult {
        id: entry.id.clone(),
        api: entry.api.clone(),
        verdict,
        code_block_used,
    })
}

/// Evaluate a whole corpus. Results come back in dataset order; entries
/// without a response fall into the non-compilable bucket (the model failed
/// to answer); response ids unknown to the dataset are an error.
pub fn evaluate_corpus(
    dataset: &[CorpusEntry],
    responses: &[ResponseRecord],
    registry: &RuleRegistry,
) -> Result<Vec<SampleResult>, CorpusError> {
    let ids: BTreeSet<&str> = dataset.iter().map(|e| e.id.as_str()).collect();
    let mut firsts: BTreeMap<&str, &ResponseRecord> = BTreeMap::new();
    for r in responses {
        if !ids.contains(r.id.as_str()) {
            return Err(CorpusError::IdMismatch { id: r.id.clone() });
        }
        if firsts.contains_key(r.id.as_str()) {
            log::warn!("duplicate response for id `{}`; keeping the first", r.id);
        } else {
            firsts.insert(r.id.as_str(), r);
        }
    }
    let mut results = Vec::with_capacity(dataset.len());
    for entry in dataset {
        let result = match firsts.get(entry.id.as_str()) {
            Some(record) => evaluate_response(entry, record, registry)?,
            None => SampleResult {
                id: entry.id.clone(),
                api: entry.api.clone(),
                verdict: CheckVerdict {
                    status: VerdictStatus::NonParsable,
                    best_rule: None,
                    matched_len: 0,
                    missing_items: Vec::new(),
                    alignment: Vec::new(),
                },
                code_block_used: None,
            },
        };
        results.push(result);
    }
    Ok(results)
}

/// Group results by the dataset's API and compute per-group counters.
pub fn per_api_breakdown(
    results: &[SampleResult],
    dataset: &[CorpusEntry],
) -> Result<BTreeMap<String, ApiCounters>, CorpusError> {
    let by_id: BTreeMap<&str, &CorpusEntry> =
        dataset.iter().map(|e| (e.id.as_str(), e)).collect();
    for r in results {
        if !by_id.contains_key(r.id.as_str()) {
            return Err(CorpusError::IdMismatch { id: r.id.clone() });
        }
    }
    let metrics = compute_metrics(results)?;
    Ok(metrics.per_api)
}
