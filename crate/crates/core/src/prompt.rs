//! Prompt construction for the three benchmark modes.
//!
//! A prompt is the task instruction and response-format contract, an
//! optional demonstration pair, the question, and the API hint. In
//! one-shot-relevant mode the demonstration uses the question's own API;
//! in one-shot-irrelevant mode it is a fixed unrelated example. The demo
//! loader re-checks every relevant demo against the rules, so a store can
//! never hand out a demonstration that itself misuses its API.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusEntry;
use crate::rules::{check_snippet, ApiTarget, RuleRegistry, VerdictStatus};

/// Marker API for the unrelated demonstration.
pub const IRRELEVANT_API: &str = "IRRELEVANT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptMode {
    ZeroShot,
    OneShotIrrelevant,
    OneShotRelevant,
}

impl PromptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::ZeroShot => "zero-shot",
            PromptMode::OneShotIrrelevant => "one-shot-irrelevant",
            PromptMode::OneShotRelevant => "one-shot-relevant",
        }
    }
}

impl FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero-shot" => Ok(PromptMode::ZeroShot),
            "one-shot-irrelevant" => Ok(PromptMode::OneShotIrrelevant),
            "one-shot-relevant" => Ok(PromptMode::OneShotRelevant),
            other => Err(format!(
                "unknown mode `{other}` (expected zero-shot, one-shot-irrelevant or one-shot-relevant)"
            )),
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One demonstration pair. `api` is `Class.method` or [`IRRELEVANT_API`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoExample {
    pub api: String,
    pub question: String,
    /// Java code in the required response format.
    pub answer: String,
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("no demonstration available for `{api}`")]
    MissingDemo { api: String },
    #[error("demonstration for `{api}` fails its own check: {status}")]
    DemoMisuse { api: String, status: String },
    #[error("schema error in {context}: {message}")]
    Schema { context: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Validated demonstrations, one relevant demo per API plus the irrelevant
/// one.
#[derive(Debug, Clone, Default)]
pub struct DemoStore {
    relevant: BTreeMap<String, DemoExample>,
    irrelevant: Option<DemoExample>,
}

impl DemoStore {
    pub fn len(&self) -> usize {
        self.relevant.len() + usize::from(self.irrelevant.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn relevant_for(&self, api: &str) -> Option<&DemoExample> {
        self.relevant.get(api)
    }

    pub fn irrelevant(&self) -> Option<&DemoExample> {
        self.irrelevant.as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DemoExample> {
        self.relevant.values().chain(self.irrelevant.iter())
    }
}

const DEFAULT_DEMOS: &str = include_str!("../data/demos.jsonl");

/// The demo file shipped with the crate, validated against `registry`.
pub fn default_demos(registry: &RuleRegistry) -> DemoStore {
    demos_from_text(DEFAULT_DEMOS, registry).expect("builtin demos are valid")
}

/// Raw text of the shipped demo file.
pub fn default_demos_text() -> &'static str {
    DEFAULT_DEMOS
}

/// Load and validate a line-delimited demo file. Every relevant demo must
/// pass the check for its own API.
pub fn load_demos(path: &Path, registry: &RuleRegistry) -> Result<DemoStore, PromptError> {
    let text = std::fs::read_to_string(path).map_err(|source| PromptError::Io {
        path: path.display().to_string(),
        source,
    })?;
    demos_from_text(&text, registry)
}

pub fn demos_from_text(text: &str, registry: &RuleRegistry) -> Result<DemoStore, PromptError> {
    let mut store = DemoStore::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let demo: DemoExample =
            serde_json::from_str(line).map_err(|e| PromptError::Schema {
                context: format!("demos line {}", lineno + 1),
                message: e.to_string(),
            })?;
        if demo.api == IRRELEVANT_API {
            store.irrelevant = Some(demo);
            continue;
        }
        let target: ApiTarget = demo.api.parse().map_err(|e: String| PromptError::Schema {
            context: format!("demos line {}", lineno + 1),
            message: e,
        })?;
        let verdict = check_snippet(&demo.answer, registry, &target);
        if verdict.status != VerdictStatus::Pass {
            return Err(PromptError::DemoMisuse {
                api: demo.api.clone(),
                status: verdict.status.as_str().to_string(),
            });
        }
        store.relevant.insert(demo.api.clone(), demo);
    }
    Ok(store)
}

/// Tags and instruction text used when assembling prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptConfig {
    pub instruction: String,
    pub question_tag: String,
    pub answer_tag: String,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            instruction: "Answer the Java programming question below. Reply with a Java code \
                          snippet that solves the question, placed under the answer tag, \
                          followed by at most two sentences of explanation."
                .to_string(),
            question_tag: "### Question".to_string(),
            answer_tag: "### Answer".to_string(),
        }
    }
}

/// Assemble the prompt for one entry with the default configuration.
pub fn build_prompt(
    entry: &CorpusEntry,
    mode: PromptMode,
    demos: &DemoStore,
) -> Result<String, PromptError> {
    build_prompt_with(entry, mode, demos, &PromptConfig::default())
}

pub fn build_prompt_with(
    entry: &CorpusEntry,
    mode: PromptMode,
    demos: &DemoStore,
    config: &PromptConfig,
) -> Result<String, PromptError> {
    let demo = match mode {
        PromptMode::ZeroShot => None,
        PromptMode::OneShotIrrelevant => Some(
            demos
                .irrelevant()
                .ok_or_else(|| PromptError::MissingDemo { api: IRRELEVANT_API.to_string() })?,
        ),
        PromptMode::OneShotRelevant => Some(
            demos
                .relevant_for(&entry.api)
                .ok_or_else(|| PromptError::MissingDemo { api: entry.api.clone() })?,
        ),
    };
    let mut out = String::new();
    out.push_str(&config.instruction);
    out.push('\n');
    if let Some(demo) = demo {
        out.push('\n');
        out.push_str(&config.question_tag);
        out.push('\n');
        out.push_str(&demo.question);
        out.push('\n');
        out.push_str(&config.answer_tag);
        out.push('\n');
        out.push_str(&demo.answer);
        out.push('\n');
    }
    out.push('\n');
    out.push_str(&config.question_tag);
    out.push('\n');
    out.push_str(&entry.question);
    out.push('\n');
    out.push_str(&format!("Use the Java API {} in your answer.\n", entry.api));
    out.push_str(&config.answer_tag);
    out.push('\n');
    Ok(out)
}

/// One emitted prompt, keyed like the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub prompt: String,
}
