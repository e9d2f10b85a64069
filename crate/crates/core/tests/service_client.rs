mod common;

use common::{fake_service, MockServer};
use factcheck_core::coherence::{NliBackend, NliRelation};
use factcheck_core::corpus::VeracityLabel;
use factcheck_core::evidence::EmbeddingBackend;
use factcheck_core::explain::SummarizerBackend;
use factcheck_core::service::ServiceClient;
use factcheck_core::veracity::ClassifierBackend;
use factcheck_core::BackendError;
use serde_json::json;

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn fixed(status: u16, body: serde_json::Value) -> MockServer {
    let body = body.to_string();
    MockServer::start(move |_, _, _| (status, body.clone()))
}

#[test]
fn every_endpoint_round_trips() {
    let server = fake_service();
    let client = ServiceClient::new(format!("{}/", server.url()));
    assert_eq!(client.base_url(), server.url());

    let health = client.health().unwrap();
    assert_eq!(health["status"], "ok");

    let vecs = client.embed(&s(&["flu vaccine", "flu vaccine", "tax policy"])).unwrap();
    assert_eq!(vecs.len(), 3);
    assert!((vecs[0].cosine(&vecs[1]).unwrap() - 1.0).abs() < 1e-12);
    assert!(vecs[0].cosine(&vecs[2]).unwrap() < 1.0);

    let pairs = vec![
        ("it does not work".to_string(), "it works".to_string()),
        ("it works".to_string(), "it works".to_string()),
    ];
    assert_eq!(
        client.relate(&pairs).unwrap(),
        vec![NliRelation::Contradicts, NliRelation::Entails]
    );

    let dist = client.predict("claim", &s(&["evidence"])).unwrap();
    assert_eq!(dist.argmax(), VeracityLabel::True);
    assert_eq!(client.predict_batch(&[("a".into(), vec![]), ("b".into(), vec![])]).unwrap().len(), 2);

    let summary = SummarizerBackend::summarize(&client, "claim", &s(&["First.", "Second."])).unwrap();
    assert_eq!(summary, s(&["First."]));

    let log = server.requests.lock().unwrap();
    let paths: Vec<&str> = log.iter().map(|(p, _)| p.as_str()).collect();
    assert_eq!(
        paths,
        ["/v1/health", "/v1/embed", "/v1/nli", "/v1/classify", "/v1/classify", "/v1/summarize"]
    );
    assert_eq!(log[1].1, json!({"texts": ["flu vaccine", "flu vaccine", "tax policy"]}));
    assert_eq!(log[2].1["pairs"][0], json!({"premise": "it does not work", "hypothesis": "it works"}));
    assert_eq!(log[3].1, json!({"items": [{"claim": "claim", "evidence": ["evidence"]}]}));
    assert_eq!(log[5].1, json!({"items": [{"claim": "claim", "sentences": ["First.", "Second."]}]}));
}

fn protocol<T: std::fmt::Debug>(r: Result<T, BackendError>) -> String {
    match r {
        Err(BackendError::Protocol(m)) => m,
        other => panic!("expected protocol error, got {other:?}"),
    }
}

#[test]
fn length_mismatches_are_protocol_errors() {
    let server = fixed(200, json!({"vectors": [[1.0, 0.0]], "dim": 2}));
    let client = ServiceClient::new(server.url());
    protocol(client.embed(&s(&["a", "b"])));

    let server = fixed(200, json!({"relations": ["entails"]}));
    let client = ServiceClient::new(server.url());
    protocol(client.relate(&[("a".into(), "b".into()), ("c".into(), "d".into())]));

    let server = fixed(200, json!({"probs": [[0.25, 0.25, 0.25, 0.25]], "labels": ["true", "false"]}));
    let client = ServiceClient::new(server.url());
    protocol(client.classify(&[("a".into(), vec![])]));

    let server = fixed(200, json!({"summaries": []}));
    let client = ServiceClient::new(server.url());
    protocol(ServiceClient::summarize(&client, &[("a".into(), vec![])]));
}

#[test]
fn malformed_payloads_are_protocol_errors() {
    for probs in [json!([[0.5, 0.5, 0.5, 0.5]]), json!([[0.5, 0.5]]), json!([[1.5, -0.5, 0.0, 0.0]])] {
        let server = fixed(200, json!({"probs": probs, "labels": ["true"]}));
        protocol(ServiceClient::new(server.url()).classify(&[("a".into(), vec![])]));
    }
    let server = fixed(200, json!({"probs": [[1.0, 0.0, 0.0, 0.0]], "labels": ["pants-fire"]}));
    assert!(protocol(ServiceClient::new(server.url()).classify(&[("a".into(), vec![])])).contains("pants-fire"));

    let server = fixed(200, json!({"relations": ["maybe"]}));
    assert!(protocol(ServiceClient::new(server.url()).relate(&[("a".into(), "b".into())])).contains("maybe"));

    let server = fixed(200, json!({"vectors": [[1.0, 0.0, 2.0]], "dim": 2}));
    protocol(ServiceClient::new(server.url()).embed(&s(&["a"])));
    let server = fixed(200, json!({"vectors": [[]], "dim": 0}));
    protocol(ServiceClient::new(server.url()).embed(&s(&["a"])));

    let server = fixed(200, json!({"unexpected": true}));
    protocol(ServiceClient::new(server.url()).embed(&s(&["a"])));
}

#[test]
fn http_errors_map_to_status() {
    for status in [400u16, 422, 503] {
        let server = fixed(status, json!({"detail": "nope"}));
        let client = ServiceClient::new(server.url());
        match client.embed(&s(&["a"])) {
            Err(BackendError::Status { status: got, body }) => {
                assert_eq!(got, status);
                assert!(body.contains("nope"));
            }
            other => panic!("expected status error, got {other:?}"),
        }
        assert!(matches!(client.health(), Err(BackendError::Status { .. })));
    }
}

#[test]
fn closed_port_is_transport_error() {
    let port = {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.local_addr().unwrap().port()
    };
    let client = ServiceClient::with_timeout(format!("http://127.0.0.1:{port}"), std::time::Duration::from_secs(2));
    assert!(matches!(client.health(), Err(BackendError::Transport(_))));
    assert!(matches!(client.relate(&[("a".into(), "b".into())]), Err(BackendError::Transport(_))));
}
