//! End-to-end exercise of the HTTP transport against a local socket server,
//! covering the healthy two-round conversation, malformed bodies, endpoint
//! failures, and concurrent use of one client.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use serde_json::{json, Value};

use relcur_core::annotate::questionnaire::{default_questionnaire, question_subset};
use relcur_core::annotate::remote::{AnnotatorEndpoint, RemoteAnnotator};
use relcur_core::Error;

/// Serve exactly one request on `stream` with the reply from `respond`.
fn serve_one(mut stream: TcpStream, respond: &(dyn Fn(&Value) -> String + Sync)) {
    let mut reader = BufReader::new(stream.try_clone().expect("clone stream"));
    let mut request_line = String::new();
    reader.read_line(&mut request_line).expect("request line");
    assert!(
        request_line.starts_with("POST"),
        "expected POST, got {request_line}"
    );

    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header).expect("header line");
        if header.trim().is_empty() {
            break;
        }
        if let Some(rest) = header.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = rest.trim().parse().expect("content length");
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).expect("body");
    let request: Value = serde_json::from_slice(&body).expect("JSON body");

    let reply = respond(&request);
    let response = format!(
        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
        reply.len()
    );
    stream
        .write_all(response.as_bytes())
        .expect("write response");
    stream.flush().expect("flush");
}

/// Spawn a one-thread HTTP server; returns its URL. The server lives until
/// the test process exits.
fn spawn_server<F>(respond: F) -> String
where
    F: Fn(&Value) -> String + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let addr = listener.local_addr().expect("local addr");
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            serve_one(stream, &respond);
        }
    });
    format!("http://{addr}/annotate")
}

/// A well-behaved oracle: alternating YES/NO in round 1, a fixed level in
/// round 2.
fn healthy_responder(level: i64) -> impl Fn(&Value) -> String + Send + Sync {
    move |request| match request["round"].as_u64() {
        Some(1) => {
            let answers: Vec<Value> = request["questions"]
                .as_array()
                .expect("questions array")
                .iter()
                .enumerate()
                .map(|(i, q)| json!({"id": q["id"], "value": i % 2 == 0}))
                .collect();
            json!({"answers": answers}).to_string()
        }
        Some(2) => json!({"level": level}).to_string(),
        other => panic!("unexpected round {other:?}"),
    }
}

fn endpoint(url: String) -> AnnotatorEndpoint {
    AnnotatorEndpoint {
        url,
        max_retries: 1,
        timeout_secs: 5,
    }
}

#[test]
fn annotates_over_real_http() {
    let url = spawn_server(healthy_responder(3));
    let annotator = RemoteAnnotator::over_http(endpoint(url));
    let q = question_subset(&default_questionnaire(), 6).unwrap();
    let refs: Vec<String> = (0..4).map(|i| format!("clip-7#{i}")).collect();

    let result = annotator.annotate("clip-7", &refs, &q, 4).unwrap();
    assert_eq!(result.sample_id, "clip-7");
    assert_eq!(result.predicted.value(), 3);
    assert_eq!(result.frames_used, 4);
    assert_eq!(result.answers.len(), 6);
    assert!(result.answers[0].value);
    assert!(!result.answers[1].value);

    // Same key again: cache hit, no further sockets needed.
    let again = annotator.annotate("clip-7", &refs, &q, 4).unwrap();
    assert_eq!(again, result);
}

#[test]
fn concurrent_clients_share_one_cache() {
    let url = spawn_server(healthy_responder(1));
    let annotator = RemoteAnnotator::over_http(endpoint(url));
    let q = question_subset(&default_questionnaire(), 3).unwrap();

    thread::scope(|scope| {
        for i in 0..4 {
            let annotator = &annotator;
            let q = &q;
            scope.spawn(move || {
                let refs = vec![format!("s{i}#0")];
                let result = annotator.annotate(&format!("s{i}"), &refs, q, 3).unwrap();
                assert_eq!(result.predicted.value(), 1);
            });
        }
    });
    assert_eq!(annotator.cache_snapshot().len(), 4);
}

#[test]
fn non_json_body_is_a_protocol_error() {
    let url = spawn_server(|_| "level: three".to_string());
    let annotator = RemoteAnnotator::over_http(endpoint(url));
    let q = question_subset(&default_questionnaire(), 3).unwrap();

    match annotator.annotate("s1", &["s1#0".to_string()], &q, 4) {
        Err(Error::Protocol { message, payload }) => {
            assert!(message.contains("not JSON"), "{message}");
            assert!(payload.contains("three"), "{payload}");
        }
        other => panic!("expected protocol error, got {other:?}"),
    }
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    // Port 1 is reserved and closed; connections are refused immediately.
    let annotator = RemoteAnnotator::over_http(AnnotatorEndpoint {
        url: "http://127.0.0.1:1/annotate".to_string(),
        max_retries: 1,
        timeout_secs: 1,
    });
    let q = question_subset(&default_questionnaire(), 3).unwrap();

    match annotator.annotate("s1", &["s1#0".to_string()], &q, 4) {
        Err(Error::AnnotationUnavailable(message)) => {
            assert!(message.contains("127.0.0.1:1"), "{message}");
        }
        other => panic!("expected annotation-unavailable, got {other:?}"),
    }
    assert!(annotator.cache_snapshot().is_empty());
}
