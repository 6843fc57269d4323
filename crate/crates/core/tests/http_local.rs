//! The HTTP clients against a real socket on localhost.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use adacomp_core::dataset::{QaExample, RetrievalSet};
use adacomp_core::generator::{HttpGenerator, HttpGeneratorConfig, Prompt};
use adacomp_core::predictor::{CompressionRatePredictor, RemotePredictor, RemotePredictorConfig};
use adacomp_core::{CompressionLabel, Error};
use serde_json::Value;

type Seen = Arc<Mutex<Vec<(Vec<String>, Value)>>>;

struct Server {
    url: String,
    requests: Seen,
}

/// Serve one scripted `(status, body)` per connection, then stop.
fn serve(script: Vec<(u16, &'static str)>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let seen = requests.clone();
    thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut headers = Vec::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_owned();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            seen.lock().unwrap().push((headers, serde_json::from_slice(&buf).unwrap()));
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    Server { url, requests }
}

fn prompt() -> Prompt {
    Prompt {
        template_id: "default".into(),
        query: "who wrote Hamlet".into(),
        context_docs: vec![],
        text: "Question: who wrote Hamlet\nAnswer:".into(),
    }
}

fn generator(url: &str, key_var: Option<&str>) -> HttpGenerator {
    HttpGenerator::new(HttpGeneratorConfig {
        endpoint_url: url.into(),
        model_name: "local-model".into(),
        backoff_base_ms: 5,
        timeout_ms: 5_000,
        api_key_env_var: key_var.map(String::from),
        ..Default::default()
    })
}

#[test]
fn completion_round_trip_with_bearer_key() {
    std::env::set_var("LOCAL_TEST_KEY_A", "sekret");
    let server = serve(vec![(200, r#"{"text":"Shakespeare"}"#)]);
    let g = generator(&server.url, Some("LOCAL_TEST_KEY_A"));
    assert_eq!(g.generate_prompt(&prompt()).unwrap(), "Shakespeare");
    let requests = server.requests.lock().unwrap();
    let (headers, body) = &requests[0];
    assert!(headers.iter().any(|h| h.eq_ignore_ascii_case("authorization: Bearer sekret")), "{headers:?}");
    assert_eq!(body["model"], "local-model");
    assert_eq!(body["prompt"], "Question: who wrote Hamlet\nAnswer:");
}

#[test]
fn server_errors_are_retried() {
    let server = serve(vec![(503, "busy"), (500, "oops"), (200, r#"{"text":"ok"}"#)]);
    let g = generator(&server.url, None);
    assert_eq!(g.generate_prompt(&prompt()).unwrap(), "ok");
    assert_eq!(g.network_attempts(), 3);
}

#[test]
fn unauthorized_is_not_retried() {
    let server = serve(vec![(401, r#"{"error":"bad key"}"#)]);
    let g = generator(&server.url, None);
    let err = g.generate_prompt(&prompt()).unwrap_err();
    assert!(matches!(err, Error::Protocol { status: 401, ref message } if message == "unauthorized"), "{err}");
    assert_eq!(g.network_attempts(), 1);
}

#[test]
fn connection_refused_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut g = generator(&format!("http://127.0.0.1:{port}/v1"), None);
    g = HttpGenerator::new(HttpGeneratorConfig {
        max_retries: 1,
        ..g.config().clone()
    });
    assert!(matches!(g.generate_prompt(&prompt()), Err(Error::Transport(_))));
}

#[test]
fn remote_predictor_over_http() {
    let server = serve(vec![(200, r#"{"k":2}"#)]);
    let p = RemotePredictor::new(RemotePredictorConfig {
        endpoint_url: server.url.clone(),
        ..Default::default()
    });
    let ex = QaExample::new("q", "who wrote Hamlet", vec!["Shakespeare".into()]);
    let r = RetrievalSet::from_ordered("q", (1..=5).map(|i| (format!("d{i}"), format!("doc {i}"), 1.0))).unwrap();
    assert_eq!(p.predict(&ex, &r).unwrap(), CompressionLabel::K(2));
    assert_eq!(server.requests.lock().unwrap()[0].1["N"], 5);
}
