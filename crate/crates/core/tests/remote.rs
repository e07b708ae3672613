//! Generation-service client against a local stub server.

mod common;

use std::process::Command;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use slotforge::predict::{fetch_predictions, FetchError, GenerationClient};
use slotforge::seqgen::{build_all, parse_source, EventQuestions, Example, ExampleKind, QuestionBank};
use tiny_http::{Header, Response, Server};

use common::*;

struct Seen {
    sources: Vec<String>,
    authorization: Option<String>,
    path: String,
}

/// Stub service. `reply` maps (request number, sources) to a status and a
/// JSON body. Requests are recorded in arrival order.
struct Stub {
    url: String,
    seen: Arc<Mutex<Vec<Seen>>>,
    server: Arc<Server>,
    worker: Option<thread::JoinHandle<()>>,
}

impl Stub {
    fn start<F>(reply: F) -> Stub
    where
        F: Fn(usize, &[String]) -> (u16, Value) + Send + 'static,
    {
        let server = Arc::new(Server::http("127.0.0.1:0").unwrap());
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let worker = {
            let (server, seen) = (Arc::clone(&server), Arc::clone(&seen));
            thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let mut body = String::new();
                    request.as_reader().read_to_string(&mut body).unwrap();
                    let sources: Vec<String> = serde_json::from_str::<Value>(&body).unwrap()["sources"]
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|s| s.as_str().unwrap().to_owned())
                        .collect();
                    let authorization = request
                        .headers()
                        .iter()
                        .find(|h| h.field.equiv("Authorization"))
                        .map(|h| h.value.to_string());
                    let n = {
                        let mut seen = seen.lock().unwrap();
                        seen.push(Seen {
                            sources: sources.clone(),
                            authorization,
                            path: request.url().to_owned(),
                        });
                        seen.len() - 1
                    };
                    let (status, value) = reply(n, &sources);
                    let response = Response::from_string(value.to_string())
                        .with_status_code(status)
                        .with_header(Header::from_bytes("Content-Type", "application/json").unwrap());
                    let _ = request.respond(response);
                }
            })
        };
        Stub {
            url,
            seen,
            server,
            worker: Some(worker),
        }
    }

    fn batch_sizes(&self) -> Vec<usize> {
        self.seen.lock().unwrap().iter().map(|s| s.sources.len()).collect()
    }
}

impl Drop for Stub {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

/// Answers every source with its own question field.
fn echo(_: usize, sources: &[String]) -> (u16, Value) {
    let predictions: Vec<String> = sources.iter().map(|s| parse_source(s).unwrap().question).collect();
    (200, json!({ "predictions": predictions }))
}

fn slot_examples(n: usize) -> Vec<Example> {
    let run = synthetic_run(3);
    let examples: Vec<Example> = build_all(&run.corpus, &QuestionBank::default(), EventQuestions::OwnEvent)
        .unwrap()
        .into_iter()
        .filter(|e| e.key.kind == ExampleKind::Slot)
        .take(n)
        .collect();
    assert_eq!(examples.len(), n);
    examples
}

fn quick(url: &str) -> GenerationClient {
    GenerationClient::new(url).backoff(Duration::from_millis(5))
}

#[test]
fn batches_cover_examples_in_order() {
    let stub = Stub::start(echo);
    let examples = slot_examples(10);
    let predictions = fetch_predictions(&quick(&stub.url), &examples, 4).unwrap();
    assert_eq!(stub.batch_sizes(), vec![4, 4, 2]);
    assert_eq!(predictions.len(), 10);
    for (p, e) in predictions.iter().zip(&examples) {
        assert_eq!(p.tweet_id, e.key.tweet_id);
        assert_eq!(Some(&p.slot), e.key.slot_name.as_ref());
        assert_eq!(p.text, parse_source(&e.source).unwrap().question);
    }
    let seen = stub.seen.lock().unwrap();
    assert!(seen.iter().all(|s| s.path == "/generate"));
    let sent: Vec<&String> = seen.iter().flat_map(|s| &s.sources).collect();
    let expected: Vec<&String> = examples.iter().map(|e| &e.source).collect();
    assert_eq!(sent, expected);
}

#[test]
fn parallel_waves_preserve_order() {
    let stub = Stub::start(echo);
    let examples = slot_examples(10);
    let client = quick(&stub.url).max_in_flight(3);
    let predictions = fetch_predictions(&client, &examples, 3).unwrap();
    let mut sizes = stub.batch_sizes();
    sizes.sort_unstable();
    assert_eq!(sizes, vec![1, 3, 3, 3]);
    let texts: Vec<String> = examples
        .iter()
        .map(|e| parse_source(&e.source).unwrap().question)
        .collect();
    assert_eq!(predictions.iter().map(|p| p.text.clone()).collect::<Vec<_>>(), texts);
}

#[test]
fn short_response_is_a_length_mismatch() {
    let stub = Stub::start(|_, sources: &[String]| {
        let predictions = vec!["x"; sources.len().saturating_sub(1)];
        (200, json!({ "predictions": predictions }))
    });
    let err = fetch_predictions(&quick(&stub.url), &slot_examples(10), 10).unwrap_err();
    match err {
        FetchError::LengthMismatch {
            batch,
            keys,
            expected,
            received,
        } => {
            assert_eq!((batch, expected, received), (0, 10, 9));
            assert_eq!(keys.len(), 10);
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn unavailable_is_retried() {
    let stub = Stub::start(|n, sources: &[String]| {
        if n == 0 {
            (503, json!({ "error": "warming up" }))
        } else {
            echo(n, sources)
        }
    });
    let predictions = fetch_predictions(&quick(&stub.url), &slot_examples(2), 8).unwrap();
    assert_eq!(predictions.len(), 2);
    assert_eq!(stub.batch_sizes(), vec![2, 2]);
}

#[test]
fn client_errors_are_not_retried() {
    let stub = Stub::start(|_, _: &[String]| (400, json!({ "error": "bad request" })));
    let err = fetch_predictions(&quick(&stub.url), &slot_examples(5), 2).unwrap_err();
    assert!(
        matches!(
            err,
            FetchError::Status {
                batch: 0,
                status: 400,
                ..
            }
        ),
        "{err}"
    );
    assert_eq!(stub.batch_sizes(), vec![2]);
}

#[test]
fn retries_are_bounded() {
    let stub = Stub::start(|_, _: &[String]| (500, json!({})));
    let err = fetch_predictions(&quick(&stub.url).retries(2), &slot_examples(1), 1).unwrap_err();
    assert!(matches!(err, FetchError::Status { status: 500, .. }), "{err}");
    assert_eq!(stub.batch_sizes().len(), 3);
}

#[test]
fn no_examples_means_no_requests() {
    let stub = Stub::start(echo);
    assert!(fetch_predictions(&quick(&stub.url), &[], 4).unwrap().is_empty());
    assert!(stub.batch_sizes().is_empty());
}

#[test]
fn zero_batch_size_is_rejected() {
    assert!(matches!(
        fetch_predictions(&GenerationClient::new("http://127.0.0.1:9"), &slot_examples(1), 0),
        Err(FetchError::ZeroBatchSize)
    ));
}

#[test]
fn bearer_token_is_sent() {
    let stub = Stub::start(echo);
    let client = quick(&stub.url).bearer_token(Some("s3cret".into()));
    fetch_predictions(&client, &slot_examples(1), 1).unwrap();
    assert_eq!(
        stub.seen.lock().unwrap()[0].authorization.as_deref(),
        Some("Bearer s3cret")
    );
}

#[test]
fn generate_path_is_not_doubled() {
    assert_eq!(GenerationClient::new("http://h:1/").url(), "http://h:1/generate");
    assert_eq!(
        GenerationClient::new("http://h:1/generate").url(),
        "http://h:1/generate"
    );
}

fn slotforge() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_slotforge"));
    cmd.env_remove("SLOTFORGE_GEN_ENDPOINT")
        .env_remove("SLOTFORGE_GEN_TOKEN");
    cmd
}

#[test]
fn evaluate_against_endpoint() {
    let stub = Stub::start(echo);
    let out = tempfile::tempdir().unwrap();
    let status = slotforge()
        .args(["evaluate", "--batch-size", "5", "--compare", "raw,post"])
        .arg("--corpus")
        .arg(fixture("corpus.jsonl"))
        .arg("--out")
        .arg(out.path())
        .env("SLOTFORGE_GEN_ENDPOINT", &stub.url)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(stub.batch_sizes(), vec![5, 5, 2]);
    let predictions = std::fs::read_to_string(out.path().join("predictions.jsonl")).unwrap();
    assert_eq!(predictions.lines().count(), 12);
    for name in [
        "snapped.jsonl",
        "report.raw.json",
        "report.post.json",
        "underestimation.json",
    ] {
        assert!(out.path().join(name).exists(), "{name} missing");
    }
}

#[test]
fn fetch_writes_predictions() {
    let stub = Stub::start(echo);
    let out = tempfile::tempdir().unwrap();
    let status = slotforge()
        .arg("fetch")
        .arg("--endpoint")
        .arg(&stub.url)
        .arg("--corpus")
        .arg(fixture("corpus.jsonl"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let lines = std::fs::read_to_string(out.path().join("predictions.jsonl")).unwrap();
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert_eq!(
        first,
        json!({"tweet_id": "1250001", "slot": "who", "text": "who is tested positive?"})
    );
}

#[test]
fn unreachable_service_exits_3_without_output() {
    // Bind then drop a listener to get a port nobody is serving.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let out = tempfile::tempdir().unwrap();
    let status = slotforge()
        .args(["evaluate", "--retries", "0", "--timeout-secs", "5"])
        .arg("--endpoint")
        .arg(format!("http://127.0.0.1:{port}"))
        .arg("--corpus")
        .arg(fixture("corpus.jsonl"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(
        status.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 0);
}
