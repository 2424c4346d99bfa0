//! Remote annotation client: a two-round JSON-over-POST conversation with
//! an external oracle endpoint, with retries and response caching.
//!
//! Round 1 sends the question texts and opaque frame references and expects
//! per-question YES/NO answers; round 2 asks for a single integer level.
//! Frame references are never interpreted locally, and annotations never
//! overwrite ground-truth labels.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::annotate::questionnaire::Questionnaire;
use crate::annotate::{AnnotationCache, AnnotationResult, Answer, CacheKey};
use crate::error::{Error, Result};
use crate::label::OrdinalLabel;

/// Instruction sent in round 2. The endpoint must reply with the bare level.
pub fn classification_instruction(k: usize) -> String {
    format!(
        "Based on the answers above, classify the engagement level. \
         Output only the engagement level as a single number from 0 to {}. \
         Provide no additional text or explanation in the output.",
        k - 1
    )
}

/// Pseudo-question id carrying the round-2 instruction.
pub const CLASSIFICATION_ID: &str = "classification";

/// How to reach the remote oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotatorEndpoint {
    pub url: String,
    /// Additional attempts after a failed POST (transport failures only;
    /// malformed responses are not retried).
    pub max_retries: usize,
    pub timeout_secs: u64,
}

impl Default for AnnotatorEndpoint {
    fn default() -> Self {
        Self {
            url: String::new(),
            max_retries: 2,
            timeout_secs: 30,
        }
    }
}

/// Blocking JSON POST transport. Implementations map connection-level
/// failures to [`Error::AnnotationUnavailable`] and non-JSON bodies to
/// [`Error::Protocol`].
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, body: &Value) -> Result<Value>;
}

/// [`Transport`] over plain HTTP.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout_secs: u64) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(timeout_secs)))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, body: &Value) -> Result<Value> {
        let payload = serde_json::to_string(body)?;
        let mut response = self
            .agent
            .post(url)
            .header("content-type", "application/json")
            .send(payload)
            .map_err(|e| Error::AnnotationUnavailable(format!("POST {url}: {e}")))?;
        let text = response.body_mut().read_to_string().map_err(|e| {
            Error::AnnotationUnavailable(format!("reading response from {url}: {e}"))
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Protocol {
            message: format!("response is not JSON: {e}"),
            payload: text,
        })
    }
}

#[derive(Serialize)]
struct QuestionPayload<'a> {
    id: &'a str,
    text: &'a str,
}

#[derive(Serialize)]
struct AnnotationRequest<'a> {
    sample_id: &'a str,
    frame_refs: &'a [String],
    round: u8,
    questions: Vec<QuestionPayload<'a>>,
}

#[derive(Deserialize)]
struct RoundOneResponse {
    answers: Vec<Answer>,
}

#[derive(Deserialize)]
struct RoundTwoResponse {
    level: i64,
}

/// Client for the two-round protocol, caching by (sample, frame budget,
/// question set). The cache may be pre-loaded from a file and is safe to
/// share across threads.
pub struct RemoteAnnotator<T: Transport> {
    endpoint: AnnotatorEndpoint,
    transport: T,
    cache: Mutex<AnnotationCache>,
}

impl RemoteAnnotator<HttpTransport> {
    pub fn over_http(endpoint: AnnotatorEndpoint) -> Self {
        let transport = HttpTransport::new(endpoint.timeout_secs);
        Self::with_transport(endpoint, transport)
    }
}

impl<T: Transport> RemoteAnnotator<T> {
    pub fn with_transport(endpoint: AnnotatorEndpoint, transport: T) -> Self {
        Self {
            endpoint,
            transport,
            cache: Mutex::new(AnnotationCache::new()),
        }
    }

    /// Seed the cache (typically from the annotation cache file).
    pub fn preload_cache(&self, cache: AnnotationCache) {
        *self.cache.lock().expect("cache lock") = cache;
    }

    /// Snapshot of the cache for persistence.
    pub fn cache_snapshot(&self) -> AnnotationCache {
        self.cache.lock().expect("cache lock").clone()
    }

    /// Annotate one sample on a K-level scale. Served from the cache when an
    /// entry for (sample, frame count, question ids) exists; otherwise runs
    /// both protocol rounds and caches the result.
    pub fn annotate(
        &self,
        sample_id: &str,
        frame_refs: &[String],
        q: &Questionnaire,
        k: usize,
    ) -> Result<AnnotationResult> {
        q.validate()?;
        if k < 2 {
            return Err(Error::invalid_input(format!(
                "need at least 2 classes, got {k}"
            )));
        }
        let key = CacheKey {
            sample_id: sample_id.to_string(),
            frames: frame_refs.len(),
            question_ids: q.ids(),
        };
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }

        let answers = self.round_one(sample_id, frame_refs, q)?;
        let predicted = self.round_two(sample_id, frame_refs, k)?;

        let result = AnnotationResult {
            sample_id: sample_id.to_string(),
            answers,
            predicted,
            frames_used: frame_refs.len(),
            questions_used: q.ids(),
        };
        result.validate()?;
        self.cache
            .lock()
            .expect("cache lock")
            .insert(result.clone());
        Ok(result)
    }

    fn post_with_retries(&self, body: &Value) -> Result<Value> {
        let mut last = None;
        for _ in 0..=self.endpoint.max_retries {
            match self.transport.post_json(&self.endpoint.url, body) {
                Ok(value) => return Ok(value),
                Err(err @ Error::AnnotationUnavailable(_)) => last = Some(err),
                Err(other) => return Err(other),
            }
        }
        Err(last
            .unwrap_or_else(|| Error::AnnotationUnavailable("no attempts were made".to_string())))
    }

    fn round_one(
        &self,
        sample_id: &str,
        frame_refs: &[String],
        q: &Questionnaire,
    ) -> Result<Vec<Answer>> {
        let request = AnnotationRequest {
            sample_id,
            frame_refs,
            round: 1,
            questions: q
                .questions
                .iter()
                .map(|question| QuestionPayload {
                    id: &question.id,
                    text: &question.text,
                })
                .collect(),
        };
        let raw = self.post_with_retries(&serde_json::to_value(&request)?)?;
        let parsed: RoundOneResponse =
            serde_json::from_value(raw.clone()).map_err(|e| Error::Protocol {
                message: format!("malformed round-1 response: {e}"),
                payload: raw.to_string(),
            })?;

        // Reorder to questionnaire order; reject missing/extra/duplicate ids.
        let mut by_id = std::collections::HashMap::new();
        for answer in parsed.answers {
            if by_id.insert(answer.id.clone(), answer).is_some() {
                return Err(Error::Protocol {
                    message: "duplicate answer id in round-1 response".to_string(),
                    payload: raw.to_string(),
                });
            }
        }
        let mut answers = Vec::with_capacity(q.questions.len());
        for question in &q.questions {
            let answer = by_id.remove(&question.id).ok_or_else(|| Error::Protocol {
                message: format!("round-1 response missing answer for {}", question.id),
                payload: raw.to_string(),
            })?;
            answers.push(answer);
        }
        if !by_id.is_empty() {
            return Err(Error::Protocol {
                message: "round-1 response answers unasked questions".to_string(),
                payload: raw.to_string(),
            });
        }
        Ok(answers)
    }

    fn round_two(&self, sample_id: &str, frame_refs: &[String], k: usize) -> Result<OrdinalLabel> {
        let instruction = classification_instruction(k);
        let request = AnnotationRequest {
            sample_id,
            frame_refs,
            round: 2,
            questions: vec![QuestionPayload {
                id: CLASSIFICATION_ID,
                text: &instruction,
            }],
        };
        let raw = self.post_with_retries(&serde_json::to_value(&request)?)?;
        let parsed: RoundTwoResponse =
            serde_json::from_value(raw.clone()).map_err(|e| Error::Protocol {
                message: format!("malformed round-2 response: {e}"),
                payload: raw.to_string(),
            })?;
        usize::try_from(parsed.level)
            .ok()
            .and_then(|level| OrdinalLabel::new(level, k).ok())
            .ok_or_else(|| Error::Protocol {
                message: format!("level {} outside [0, {}]", parsed.level, k - 1),
                payload: raw.to_string(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::questionnaire::{default_questionnaire, question_subset};
    use serde_json::json;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Scripted transport: answers every round-1 request with fixed values
    /// and every round-2 request with a fixed level, counting calls.
    struct StubTransport {
        calls: AtomicUsize,
        level: i64,
        answer_value: Value,
    }

    impl StubTransport {
        fn healthy(level: i64) -> Self {
            Self {
                calls: AtomicUsize::new(0),
                level,
                answer_value: json!(true),
            }
        }

        fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    impl Transport for StubTransport {
        fn post_json(&self, _url: &str, body: &Value) -> Result<Value> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            assert!(body["sample_id"].is_string());
            assert!(body["frame_refs"].is_array());
            match body["round"].as_u64() {
                Some(1) => {
                    let answers: Vec<Value> = body["questions"]
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|question| {
                            assert!(question["text"].as_str().unwrap().len() > 5);
                            json!({"id": question["id"], "value": self.answer_value})
                        })
                        .collect();
                    Ok(json!({ "answers": answers }))
                }
                Some(2) => {
                    let text = body["questions"][0]["text"].as_str().unwrap();
                    assert!(
                        text.contains("Output only the engagement level as a single number"),
                        "round-2 instruction missing: {text}"
                    );
                    Ok(json!({ "level": self.level }))
                }
                other => panic!("unexpected round {other:?}"),
            }
        }
    }

    struct FailingTransport {
        calls: AtomicUsize,
    }

    impl Transport for FailingTransport {
        fn post_json(&self, url: &str, _body: &Value) -> Result<Value> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Err(Error::AnnotationUnavailable(format!(
                "connection refused: {url}"
            )))
        }
    }

    fn frame_refs(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("frame-{i}")).collect()
    }

    fn endpoint() -> AnnotatorEndpoint {
        AnnotatorEndpoint {
            url: "http://oracle.test/annotate".to_string(),
            ..Default::default()
        }
    }

    #[test]
    fn healthy_round_trip_and_cache() {
        let annotator = RemoteAnnotator::with_transport(endpoint(), StubTransport::healthy(2));
        let q = question_subset(&default_questionnaire(), 6).unwrap();
        let refs = frame_refs(8);

        let first = annotator.annotate("s1", &refs, &q, 4).unwrap();
        assert_eq!(first.predicted.value(), 2);
        assert_eq!(first.answers.len(), 6);
        assert_eq!(first.frames_used, 8);
        assert_eq!(annotator.transport.calls(), 2);

        // Identical key: served from cache with zero network calls.
        let second = annotator.annotate("s1", &refs, &q, 4).unwrap();
        assert_eq!(second, first);
        assert_eq!(annotator.transport.calls(), 2);

        // Different frame budget: a fresh pair of calls.
        annotator.annotate("s1", &frame_refs(4), &q, 4).unwrap();
        assert_eq!(annotator.transport.calls(), 4);
    }

    #[test]
    fn cache_survives_snapshot_and_preload() {
        let annotator = RemoteAnnotator::with_transport(endpoint(), StubTransport::healthy(1));
        let q = question_subset(&default_questionnaire(), 3).unwrap();
        let refs = frame_refs(2);
        let result = annotator.annotate("s9", &refs, &q, 4).unwrap();
        let snapshot = annotator.cache_snapshot();

        let fresh = RemoteAnnotator::with_transport(endpoint(), StubTransport::healthy(1));
        fresh.preload_cache(snapshot);
        let served = fresh.annotate("s9", &refs, &q, 4).unwrap();
        assert_eq!(served, result);
        assert_eq!(fresh.transport.calls(), 0);
    }

    #[test]
    fn out_of_range_level_is_a_protocol_error() {
        let annotator = RemoteAnnotator::with_transport(endpoint(), StubTransport::healthy(5));
        let q = question_subset(&default_questionnaire(), 3).unwrap();
        match annotator.annotate("s1", &frame_refs(2), &q, 4) {
            Err(Error::Protocol { message, payload }) => {
                assert!(message.contains("outside"), "{message}");
                assert!(payload.contains('5'), "{payload}");
            }
            other => panic!("expected protocol error, got {other:?}"),
        }
        // Nothing cached on failure.
        assert!(annotator.cache_snapshot().is_empty());
    }

    #[test]
    fn negative_level_is_a_protocol_error() {
        let annotator = RemoteAnnotator::with_transport(endpoint(), StubTransport::healthy(-1));
        let q = question_subset(&default_questionnaire(), 3).unwrap();
        assert!(matches!(
            annotator.annotate("s1", &frame_refs(2), &q, 4),
            Err(Error::Protocol { .. })
        ));
    }

    #[test]
    fn non_boolean_answer_is_a_protocol_error() {
        let transport = StubTransport {
            calls: AtomicUsize::new(0),
            level: 1,
            answer_value: json!("yes"),
        };
        let annotator = RemoteAnnotator::with_transport(endpoint(), transport);
        let q = question_subset(&default_questionnaire(), 3).unwrap();
        match annotator.annotate("s1", &frame_refs(2), &q, 4) {
            Err(Error::Protocol { message, payload }) => {
                assert!(message.contains("round-1"), "{message}");
                assert!(payload.contains("yes"), "{payload}");
            }
            other => panic!("expected protocol error, got {other:?}"),
        }
    }

    #[test]
    fn transport_failure_retries_then_fails() {
        let ep = AnnotatorEndpoint {
            max_retries: 3,
            ..endpoint()
        };
        let annotator = RemoteAnnotator::with_transport(
            ep,
            FailingTransport {
                calls: AtomicUsize::new(0),
            },
        );
        let q = question_subset(&default_questionnaire(), 3).unwrap();
        match annotator.annotate("s1", &frame_refs(2), &q, 4) {
            Err(Error::AnnotationUnavailable(msg)) => assert!(msg.contains("refused"), "{msg}"),
            other => panic!("expected annotation-unavailable, got {other:?}"),
        }
        // Initial attempt plus three retries, round 1 only.
        assert_eq!(annotator.transport.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn missing_answer_is_a_protocol_error() {
        struct DroppingTransport;
        impl Transport for DroppingTransport {
            fn post_json(&self, _url: &str, body: &Value) -> Result<Value> {
                match body["round"].as_u64() {
                    Some(1) => Ok(json!({"answers": [{"id": "Q1", "value": true}]})),
                    _ => Ok(json!({"level": 0})),
                }
            }
        }
        let annotator = RemoteAnnotator::with_transport(endpoint(), DroppingTransport);
        let q = question_subset(&default_questionnaire(), 3).unwrap();
        match annotator.annotate("s1", &frame_refs(2), &q, 4) {
            Err(Error::Protocol { message, .. }) => {
                assert!(message.contains("missing answer"), "{message}")
            }
            other => panic!("expected protocol error, got {other:?}"),
        }
    }
}
