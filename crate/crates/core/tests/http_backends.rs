use annobridge::llm::{
    chat, BackendError, ChatBackend, ChatMessage, ChatRequest, EndpointConfig, GatewayError,
    HttpChatBackend, RetryPolicy,
};
use annobridge::metrics::{EmbeddingBackend, HttpEmbeddingBackend};
use mockito::Matcher;
use serde_json::json;

fn request() -> ChatRequest {
    ChatRequest {
        model: "m".into(),
        messages: vec![ChatMessage::system("s"), ChatMessage::user("{\"id\":\"a\"}")],
        temperature: 0.0,
    }
}

fn config(server: &mockito::Server) -> EndpointConfig {
    let mut cfg = EndpointConfig::new(format!("{}/v1/", server.url()), "m");
    cfg.api_key = Some("secret".into());
    cfg
}

#[test]
fn chat_success_sends_bearer_and_parses_content() {
    let mut server = mockito::Server::new();
    let mock = server
        .mock("POST", "/v1/chat/completions")
        .match_header("authorization", "Bearer secret")
        .match_body(Matcher::PartialJson(json!({"model": "m", "temperature": 0.0})))
        .with_status(200)
        .with_body(
            json!({
                "choices": [{"message": {"role": "assistant", "content": "{\"ok\": 1}"}}],
                "usage": {"prompt_tokens": 3, "completion_tokens": 2, "total_tokens": 5}
            })
            .to_string(),
        )
        .create();
    let backend = HttpChatBackend::new(config(&server)).unwrap();
    let reply = backend.complete(&request()).unwrap();
    assert_eq!(reply.content, "{\"ok\": 1}");
    assert_eq!(reply.usage.unwrap().total_tokens, 5);
    mock.assert();
}

#[test]
fn status_codes_map_to_errors() {
    let mut server = mockito::Server::new();
    let backend = HttpChatBackend::new(config(&server)).unwrap();
    for (status, check) in [
        (401, (|e: &BackendError| matches!(e, BackendError::Auth(_))) as fn(&BackendError) -> bool),
        (403, |e| matches!(e, BackendError::Auth(_))),
        (429, |e| matches!(e, BackendError::RateLimited(_))),
        (503, |e| matches!(e, BackendError::Status { status: 503, .. })),
    ] {
        let m = server.mock("POST", "/v1/chat/completions").with_status(status).with_body("nope").create();
        let err = backend.complete(&request()).unwrap_err();
        assert!(check(&err), "{status}: {err:?}");
        m.remove();
    }
    let m = server.mock("POST", "/v1/chat/completions").with_status(200).with_body("<html>").create();
    assert!(matches!(backend.complete(&request()), Err(BackendError::Protocol(_))));
    m.remove();
}

#[test]
fn auth_failure_is_not_retried() {
    let mut server = mockito::Server::new();
    let mock = server.mock("POST", "/v1/chat/completions").with_status(401).expect(1).create();
    let backend = HttpChatBackend::new(config(&server)).unwrap();
    let err = chat(&backend, &request(), &RetryPolicy::immediate(5)).unwrap_err();
    assert!(matches!(err, GatewayError::Auth(_)));
    mock.assert();
}

#[test]
fn server_errors_are_retried_until_exhausted() {
    let mut server = mockito::Server::new();
    let mock = server.mock("POST", "/v1/chat/completions").with_status(500).expect(3).create();
    let backend = HttpChatBackend::new(config(&server)).unwrap();
    let err = chat(&backend, &request(), &RetryPolicy::immediate(3)).unwrap_err();
    assert!(matches!(err, GatewayError::Exhausted { attempts: 3, .. }), "{err:?}");
    mock.assert();
}

#[test]
fn embeddings_are_reordered_by_index() {
    let mut server = mockito::Server::new();
    let mock = server
        .mock("POST", "/v1/embeddings")
        .match_body(Matcher::Json(json!({"model": "m", "input": ["a", "b"]})))
        .with_status(200)
        .with_body(
            json!({"data": [
                {"index": 1, "embedding": [0.0, 1.0]},
                {"index": 0, "embedding": [1.0, 0.0]}
            ]})
            .to_string(),
        )
        .create();
    let backend = HttpEmbeddingBackend::new(config(&server)).unwrap();
    let v = backend.embed_batch(&["a".to_string(), "b".to_string()]).unwrap();
    assert_eq!(v, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    mock.assert();
}
