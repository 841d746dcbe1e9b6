//! Batch client for chat-completion endpoints.
//!
//! Strictly optional plumbing: the analysis pipeline never needs it. One
//! request per prompt, bounded parallelism, exponential backoff on 429/5xx,
//! and a checkpoint file so an interrupted batch resumes without re-querying
//! finished ids. The API key is read from an environment variable at call
//! time and never written anywhere.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ResponseRecord;
use crate::prompt::PromptRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first one.
    pub attempts: u32,
    /// First backoff; doubles per retry.
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, backoff: Duration::from_millis(500) }
    }
}

/// Where and how to send requests. The key itself is never stored — only
/// the name of the environment variable holding it.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub api_key_env: String,
    pub max_parallel: usize,
    pub retry: RetryPolicy,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://localhost:8000/v1".to_string(),
            model: "gpt-3.5-turbo".to_string(),
            temperature: 0.0,
            max_tokens: 1024,
            api_key_env: "OPENAI_API_KEY".to_string(),
            max_parallel: 4,
            retry: RetryPolicy::default(),
        }
    }
}

impl EndpointConfig {
    fn endpoint(&self) -> String {
        if self.base_url.ends_with("/chat/completions") {
            self.base_url.clone()
        } else {
            format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
        }
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: Vec<ChatMessage<'a>>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

/// Send one prompt and return the assistant text. Fails before any network
/// traffic when the key variable is unset.
pub fn complete(prompt: &str, cfg: &EndpointConfig) -> Result<String, ClientError> {
    let key = std::env::var(&cfg.api_key_env)
        .map_err(|_| ClientError::Auth(format!("environment variable {} is not set", cfg.api_key_env)))?;
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(120))
        .build()
        .map_err(|e| ClientError::Transport(e.to_string()))?;
    complete_with(&client, prompt, cfg, &key)
}

fn complete_with(
    client: &reqwest::blocking::Client,
    prompt: &str,
    cfg: &EndpointConfig,
    key: &str,
) -> Result<String, ClientError> {
    let body = ChatRequest {
        model: &cfg.model,
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
        messages: vec![ChatMessage { role: "user", content: prompt }],
    };
    let url = cfg.endpoint();
    let mut backoff = cfg.retry.backoff;
    let attempts = cfg.retry.attempts.max(1);
    for attempt in 1..=attempts {
        let sent = client
            .post(&url)
            .bearer_auth(key)
            .json(&body)
            .send();
        match sent {
            Ok(resp) => {
                let status = resp.status();
                if status.as_u16() == 401 || status.as_u16() == 403 {
                    return Err(ClientError::Auth(format!("endpoint returned {status}")));
                }
                if status.as_u16() == 429 || status.is_server_error() {
                    if attempt == attempts {
                        if status.as_u16() == 429 {
                            return Err(ClientError::RateLimited { attempts });
                        }
                        return Err(ClientError::Transport(format!("endpoint returned {status}")));
                    }
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    continue;
                }
                if !status.is_success() {
                    return Err(ClientError::Transport(format!("endpoint returned {status}")));
                }
                let parsed: ChatResponse = resp
                    .json()
                    .map_err(|e| ClientError::Malformed(e.to_string()))?;
                return parsed
                    .choices
                    .into_iter()
                    .next()
                    .map(|c| c.message.content)
                    .ok_or_else(|| ClientError::Malformed("no choices in response".to_string()));
            }
            Err(e) => {
                if attempt == attempts {
                    return Err(ClientError::Transport(e.to_string()));
                }
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
    }
    unreachable!("loop returns on the last attempt")
}

/// Outcome of a batch run.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    /// Prompts answered in this run.
    pub completed: usize,
    /// Prompts satisfied by the checkpoint from an earlier run.
    pub resumed: usize,
    /// Failures as (id, error message).
    pub failed: Vec<(String, String)>,
}

impl BatchReport {
    pub fn all_ok(&self) -> bool {
        self.failed.is_empty()
    }
}

fn checkpoint_path(out_path: &Path) -> PathBuf {
    let mut os = out_path.as_os_str().to_owned();
    os.push(".partial");
    PathBuf::from(os)
}

fn read_checkpoint(path: &Path) -> Result<BTreeMap<String, String>, ClientError> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = std::fs::read_to_string(path).map_err(|source| ClientError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut done = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rec: ResponseRecord = serde_json::from_str(line)
            .map_err(|e| ClientError::Malformed(format!("checkpoint: {e}")))?;
        done.insert(rec.id, rec.response);
    }
    Ok(done)
}

/// Write a JSONL responses file atomically (write to a sibling, rename).
fn write_records_atomic(path: &Path, records: &[ResponseRecord]) -> Result<(), ClientError> {
    let mut body = String::new();
    for r in records {
        body.push_str(&serde_json::to_string(r).expect("record serializes"));
        body.push('\n');
    }
    let tmp = path.with_extension("tmp");
    let io_err = |source: std::io::Error| ClientError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::write(&tmp, body).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

/// Run every prompt against the endpoint with at most `max_parallel`
/// requests in flight. Completed answers land in a checkpoint as they
/// arrive; when everything succeeded the final file is written in prompt
/// order and the checkpoint removed. On partial failure the checkpoint
/// stays, and a rerun only issues the missing requests.
pub fn run_batch(
    prompts: &[PromptRecord],
    cfg: &EndpointConfig,
    out_path: &Path,
) -> Result<BatchReport, ClientError> {
    let key = std::env::var(&cfg.api_key_env)
        .map_err(|_| ClientError::Auth(format!("environment variable {} is not set", cfg.api_key_env)))?;
    let ckpt_path = checkpoint_path(out_path);
    let done = read_checkpoint(&ckpt_path)?;
    let resumed = prompts.iter().filter(|p| done.contains_key(&p.id)).count();
    let todo: Vec<&PromptRecord> = prompts
        .iter()
        .filter(|p| !done.contains_key(&p.id))
        .collect();

    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(120))
        .build()
        .map_err(|e| ClientError::Transport(e.to_string()))?;

    struct Shared {
        done: BTreeMap<String, String>,
        failed: Vec<(String, String)>,
    }
    let state = Mutex::new(Shared { done, failed: Vec::new() });
    let next = std::sync::atomic::AtomicUsize::new(0);
    let persist = |state: &Shared| -> Result<(), ClientError> {
        let records: Vec<ResponseRecord> = state
            .done
            .iter()
            .map(|(id, response)| ResponseRecord {
                id: id.clone(),
                response: response.clone(),
                meta: None,
            })
            .collect();
        write_records_atomic(&ckpt_path, &records)
    };

    let workers = cfg.max_parallel.max(1).min(todo.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                let Some(prompt) = todo.get(idx) else { break };
                let outcome = complete_with(&client, &prompt.prompt, cfg, &key);
                let mut st = state.lock().expect("client state lock");
                match outcome {
                    Ok(text) => {
                        st.done.insert(prompt.id.clone(), text);
                        if let Err(e) = persist(&st) {
                            st.failed.push((prompt.id.clone(), e.to_string()));
                        }
                    }
                    Err(e) => st.failed.push((prompt.id.clone(), e.to_string())),
                }
            });
        }
    });

    let state = state.into_inner().expect("client state lock");
    let completed = todo.len() - state.failed.len();
    let mut failed = state.failed;
    failed.sort();
    if failed.is_empty() {
        // Final output in prompt order.
        let records: Vec<ResponseRecord> = prompts
            .iter()
            .map(|p| ResponseRecord {
                id: p.id.clone(),
                response: state.done[&p.id].clone(),
                meta: None,
            })
            .collect();
        write_records_atomic(out_path, &records)?;
        let _ = std::fs::remove_file(&ckpt_path);
    } else {
        // Keep the checkpoint for resumption; nothing final is written.
        persist_final_checkpoint(&ckpt_path, &state.done)?;
    }
    Ok(BatchReport { completed, resumed, failed })
}

fn persist_final_checkpoint(
    path: &Path,
    done: &BTreeMap<String, String>,
) -> Result<(), ClientError> {
    let records: Vec<ResponseRecord> = done
        .iter()
        .map(|(id, response)| ResponseRecord {
            id: id.clone(),
            response: response.clone(),
            meta: None,
        })
        .collect();
    if records.is_empty() {
        return Ok(());
    }
    write_records_atomic(path, &records)
}
