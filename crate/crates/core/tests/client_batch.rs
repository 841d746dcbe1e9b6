//! Batch client behavior against a local stub endpoint. No test here
//! touches the real network.

mod stub;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use japicheck::client::{complete, run_batch, ClientError, EndpointConfig, RetryPolicy};
use japicheck::corpus::parse_responses;
use japicheck::prompt::PromptRecord;
use stub::{chat_body, StubRequest, StubResponse, StubServer};

const STUB_KEY: &str = "stub-key-7d1f2a";

fn cfg_for(server: &StubServer, key_env: &str) -> EndpointConfig {
    EndpointConfig {
        base_url: server.base_url(),
        model: "stub-model".to_string(),
        temperature: 0.0,
        max_tokens: 64,
        api_key_env: key_env.to_string(),
        max_parallel: 2,
        retry: RetryPolicy { attempts: 3, backoff: Duration::from_millis(1) },
    }
}

fn prompts(n: usize) -> Vec<PromptRecord> {
    (1..=n)
        .map(|i| PromptRecord { id: format!("p{i}"), prompt: format!("prompt {i}") })
        .collect()
}

#[test]
fn complete_returns_stub_text() {
    let server = StubServer::always("OK");
    std::env::set_var("JAPICHECK_TEST_KEY_A", STUB_KEY);
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_A");
    assert_eq!(complete("hello", &cfg).unwrap(), "OK");
    assert_eq!(server.hits(), 1);
}

#[test]
fn missing_key_fails_before_any_request() {
    let server = StubServer::always("OK");
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_UNSET");
    let err = complete("hello", &cfg).unwrap_err();
    assert!(matches!(err, ClientError::Auth(_)));
    assert_eq!(server.hits(), 0);
}

#[test]
fn rate_limited_twice_then_succeeds() {
    let server = StubServer::start(Arc::new(|n, _req: &StubRequest| {
        if n < 2 {
            StubResponse { status: 429, body: "{}".to_string() }
        } else {
            StubResponse { status: 200, body: chat_body("eventually") }
        }
    }));
    std::env::set_var("JAPICHECK_TEST_KEY_B", STUB_KEY);
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_B");
    assert_eq!(complete("hello", &cfg).unwrap(), "eventually");
    assert_eq!(server.hits(), 3);
}

#[test]
fn rate_limit_surfaces_after_exhausted_retries() {
    let server = StubServer::start(Arc::new(|_, _req: &StubRequest| StubResponse {
        status: 429,
        body: "{}".to_string(),
    }));
    std::env::set_var("JAPICHECK_TEST_KEY_C", STUB_KEY);
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_C");
    let err = complete("hello", &cfg).unwrap_err();
    assert!(matches!(err, ClientError::RateLimited { attempts: 3 }));
}

#[test]
fn auth_rejection_is_not_retried() {
    let server = StubServer::start(Arc::new(|_, _req: &StubRequest| StubResponse {
        status: 401,
        body: "{}".to_string(),
    }));
    std::env::set_var("JAPICHECK_TEST_KEY_D", STUB_KEY);
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_D");
    assert!(matches!(complete("x", &cfg), Err(ClientError::Auth(_))));
    assert_eq!(server.hits(), 1);
}

#[test]
fn batch_writes_records_in_prompt_order() {
    let server = StubServer::start(Arc::new(|_, req: &StubRequest| {
        // Echo the prompt back so order is observable.
        let text = if req.body.contains("prompt 1") {
            "answer 1"
        } else if req.body.contains("prompt 2") {
            "answer 2"
        } else {
            "answer 3"
        };
        StubResponse { status: 200, body: chat_body(text) }
    }));
    std::env::set_var("JAPICHECK_TEST_KEY_E", STUB_KEY);
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_E");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("responses.jsonl");
    let report = run_batch(&prompts(3), &cfg, &out).unwrap();
    assert_eq!(report.completed, 3);
    assert_eq!(report.resumed, 0);
    assert!(report.all_ok());
    let records = parse_responses(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, vec!["p1", "p2", "p3"]);
    assert_eq!(records[0].response, "answer 1");
    // Checkpoint is cleaned up after full success.
    assert!(!dir.path().join("responses.jsonl.partial").exists());
}

#[test]
fn interrupted_batch_resumes_with_one_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("responses.jsonl");
    std::env::set_var("JAPICHECK_TEST_KEY_F", STUB_KEY);

    // First run: p2 always fails.
    {
        let server = StubServer::start(Arc::new(|_, req: &StubRequest| {
            if req.body.contains("prompt 2") {
                StubResponse { status: 500, body: "{}".to_string() }
            } else {
                StubResponse { status: 200, body: chat_body("fine") }
            }
        }));
        let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_F");
        let report = run_batch(&prompts(3), &cfg, &out).unwrap();
        assert_eq!(report.completed, 2);
        assert_eq!(report.failed.len(), 1);
        assert_eq!(report.failed[0].0, "p2");
        assert!(!out.exists());
        assert!(dir.path().join("responses.jsonl.partial").exists());
    }

    // Second run against a healthy endpoint: only p2 is requested.
    {
        let server = StubServer::always("recovered");
        let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_F");
        let report = run_batch(&prompts(3), &cfg, &out).unwrap();
        assert_eq!(report.resumed, 2);
        assert_eq!(report.completed, 1);
        assert!(report.all_ok());
        assert_eq!(server.hits(), 1);
        let records = parse_responses(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(records.len(), 3);
        let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["p1", "p2", "p3"]);
        assert_eq!(records[1].response, "recovered");
        assert!(!dir.path().join("responses.jsonl.partial").exists());
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    std::env::set_var("JAPICHECK_TEST_KEY_G", STUB_KEY);
    // Uninterrupted run.
    let clean = {
        let server = StubServer::always("same");
        let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_G");
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        run_batch(&prompts(4), &cfg, &out).unwrap();
        std::fs::read_to_string(&out).unwrap()
    };
    // Interrupted then resumed run.
    let resumed = {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.jsonl");
        {
            let server = StubServer::start(Arc::new(|_, req: &StubRequest| {
                if req.body.contains("prompt 4") {
                    StubResponse { status: 500, body: "{}".to_string() }
                } else {
                    StubResponse { status: 200, body: chat_body("same") }
                }
            }));
            let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_G");
            let r = run_batch(&prompts(4), &cfg, &out).unwrap();
            assert!(!r.all_ok());
        }
        {
            let server = StubServer::always("same");
            let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_G");
            run_batch(&prompts(4), &cfg, &out).unwrap();
        }
        std::fs::read_to_string(&out).unwrap()
    };
    assert_eq!(clean, resumed);
}

#[test]
fn all_failures_reported_with_ids() {
    let server = StubServer::start(Arc::new(|_, _req: &StubRequest| StubResponse {
        status: 500,
        body: "{}".to_string(),
    }));
    std::env::set_var("JAPICHECK_TEST_KEY_H", STUB_KEY);
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_H");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("responses.jsonl");
    let report = run_batch(&prompts(3), &cfg, &out).unwrap();
    assert_eq!(report.completed, 0);
    let failed_ids: Vec<&str> = report.failed.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(failed_ids, vec!["p1", "p2", "p3"]);
    assert!(!out.exists());
}

#[test]
fn key_never_lands_in_artifacts() {
    let server = StubServer::start(Arc::new(|_, req: &StubRequest| {
        if req.body.contains("prompt 2") {
            StubResponse { status: 500, body: "{}".to_string() }
        } else {
            StubResponse { status: 200, body: chat_body("text") }
        }
    }));
    std::env::set_var("JAPICHECK_TEST_KEY_I", STUB_KEY);
    let cfg = cfg_for(&server, "JAPICHECK_TEST_KEY_I");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("responses.jsonl");
    let _ = run_batch(&prompts(3), &cfg, &out).unwrap();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let contents = std::fs::read_to_string(&path).unwrap_or_default();
        assert!(
            !contents.contains(STUB_KEY),
            "key leaked into {}",
            path.display()
        );
    }
}
