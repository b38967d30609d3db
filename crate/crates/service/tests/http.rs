use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use debias_core::engine::GameConfig;
use debias_service::{router, EventMessage, GameService};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const ROLES: [&str; 5] = ["Hiring Agency", "Employer", "Manager", "Coworkers", "Union Rep."];

struct Client {
    app: Router,
    _dir: tempfile::TempDir,
}

impl Client {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let service = GameService::open(dir.path()).unwrap();
        Client {
            app: router(service),
            _dir: dir,
        }
    }

    async fn call(&self, method: &str, uri: &str, headers: &[(&str, &str)], body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let body = body.map_or(Body::empty(), |b| Body::from(b.to_string()));
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }

    async fn create(&self, seed: u64) -> String {
        let cfg = serde_json::to_value(GameConfig::hiring(seed, 300)).unwrap();
        let (status, body) = self.call("POST", "/games", &[], Some(cfg)).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["game_id"].as_str().unwrap().to_string()
    }

    async fn join_all(&self, id: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        for role in ROLES {
            let (status, body) = self.call("POST", &format!("/games/{id}/join"), &[], Some(json!({ "role": role }))).await;
            assert_eq!(status, StatusCode::CREATED, "{body}");
            tokens.push(body["token"].as_str().unwrap().to_string());
        }
        tokens
    }

    async fn act(&self, id: &str, token: &str, action: Value) -> (StatusCode, Value) {
        let auth = format!("Bearer {token}");
        self.call("POST", &format!("/games/{id}/actions"), &[("authorization", &auth)], Some(action)).await
    }
}

#[tokio::test]
async fn lobby() {
    let c = Client::new();
    let id = c.create(1).await;
    let (status, body) = c.call("GET", "/games", &[], None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["games"], json!([id]));

    let (status, body) = c.call("POST", &format!("/games/{id}/join"), &[], Some(json!({ "role": "Employer" }))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["player_id"], "p2");
    assert_eq!(body["token"].as_str().unwrap().len(), 32);

    let (status, body) = c.call("POST", &format!("/games/{id}/join"), &[], Some(json!({ "role": "Employer" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "role-taken");

    let (status, body) = c.call("POST", &format!("/games/{id}/join"), &[], Some(json!({ "role": "Pilot" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "unknown-role");

    let (status, body) = c.call("GET", "/games/nope/state", &[], None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not-found");
}

#[tokio::test]
async fn invalid_config_names_the_field() {
    let c = Client::new();
    let mut cfg = serde_json::to_value(GameConfig::hiring(1, 300)).unwrap();
    cfg.as_object_mut().unwrap().remove("label");
    let (status, body) = c.call("POST", "/games", &[], Some(cfg)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(body["error"], "invalid-config");
    assert_eq!(body["field"], "label");

    let mut cfg = serde_json::to_value(GameConfig::hiring(1, 300)).unwrap();
    cfg["players"] = json!([]);
    let (status, body) = c.call("POST", "/games", &[], Some(cfg)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    assert_eq!(c.call("GET", "/games", &[], None).await.1["games"], json!([]));
}

#[tokio::test]
async fn create_is_idempotent() {
    let c = Client::new();
    let cfg = serde_json::to_value(GameConfig::hiring(2, 300)).unwrap();
    let (_, a) = c.call("POST", "/games", &[("idempotency-key", "k1")], Some(cfg.clone())).await;
    let (_, b) = c.call("POST", "/games", &[("idempotency-key", "k1")], Some(cfg)).await;
    assert_eq!(a["game_id"], b["game_id"]);
    assert_eq!(c.call("GET", "/games", &[], None).await.1["games"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn action_errors() {
    let c = Client::new();
    let id = c.create(3).await;
    let tokens = c.join_all(&id).await;
    let propose = json!({ "action": "propose", "edge": "Gender -> Job", "delta": -1.0 });

    let (status, body) = c.act(&id, "bogus", propose.clone()).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("unauthorized")));
    let (status, _) = c.call("POST", &format!("/games/{id}/actions"), &[], Some(propose.clone())).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);

    let (status, body) = c.act(&id, &tokens[1], propose.clone()).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::CONFLICT, Some("not-your-turn")));

    let (status, body) = c.act(&id, &tokens[0], json!({ "action": "propose", "edge": "Gender -> Job", "delta": 1.5 })).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::BAD_REQUEST, Some("delta-out-of-range")));

    let (status, body) = c.act(&id, &tokens[0], json!({ "action": "propose", "edge": "Job -> Gender", "delta": 0.5 })).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::BAD_REQUEST, Some("unknown-edge")));

    let (status, body) = c.act(&id, &tokens[0], json!({ "action": "dance" })).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::BAD_REQUEST, Some("bad-request")));

    let (status, body) = c.act(&id, &tokens[0], json!({ "action": "vote", "choice": "stop" })).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");

    let (status, body) = c.call("GET", &format!("/games/{id}/export"), &[], None).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::CONFLICT, Some("not-concluded")));

    // nothing above changed the game
    let (_, state) = c.call("GET", &format!("/games/{id}/state"), &[], None).await;
    assert_eq!(state["round"], 1);
    assert_eq!(state["current_player"], "p1");
    assert_eq!(state["phase"], "editing");
}

#[tokio::test]
async fn action_idempotency() {
    let c = Client::new();
    let id = c.create(4).await;
    let tokens = c.join_all(&id).await;
    let auth = format!("Bearer {}", tokens[0]);
    let headers = [("authorization", auth.as_str()), ("idempotency-key", "a1")];
    let propose = json!({ "action": "propose", "edge": "Gender -> Job", "delta": -1.0 });
    let uri = format!("/games/{id}/actions");
    let (s1, first) = c.call("POST", &uri, &headers, Some(propose.clone())).await;
    let (s2, second) = c.call("POST", &uri, &headers, Some(propose)).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(first, second);
    assert_eq!(first["sequence"], 1);

    let other = json!({ "action": "propose", "edge": "Race -> Job", "delta": -1.0 });
    let (status, body) = c.call("POST", &uri, &headers, Some(other)).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::CONFLICT, Some("key-reused")));

    let (_, state) = c.call("GET", &format!("/games/{id}/state"), &[], None).await;
    assert_eq!(state["sequence"], 1);
}

async fn play_to_conclusion(c: &Client, id: &str, tokens: &[String]) {
    let steps = [
        json!({ "action": "propose", "edge": "Gender -> Job", "delta": -1.0 }),
        json!({ "action": "apply" }),
        json!({ "action": "end-turn" }),
    ];
    for s in steps {
        let (status, body) = c.act(id, &tokens[0], s).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    for t in &tokens[1..] {
        let (status, body) = c.act(id, t, json!({ "action": "end-turn" })).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    for t in tokens {
        let (status, body) = c.act(id, t, json!({ "action": "vote", "choice": "stop" })).await;
        assert_eq!(status, StatusCode::OK, "{body}");
    }
}

#[tokio::test]
async fn state_and_export() {
    let c = Client::new();
    let id = c.create(5).await;
    let tokens = c.join_all(&id).await;
    let (_, state) = c.call("GET", &format!("/games/{id}/state?edge=Gender%20-%3E%20Job"), &[], None).await;
    assert_eq!(state["status"], "in-progress");
    assert_eq!(state["players"].as_array().unwrap().len(), 5);
    let (status, _) = c.call("GET", &format!("/games/{id}/state?edge=nonsense"), &[], None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    play_to_conclusion(&c, &id, &tokens).await;
    let (_, state) = c.call("GET", &format!("/games/{id}/state"), &[], None).await;
    assert_eq!(state["status"], "concluded");
    let (status, bundle) = c.call("GET", &format!("/games/{id}/export"), &[], None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(bundle["table_csv"].as_str().unwrap().starts_with("Age,"));
    assert!(bundle["report"]["debiased"]["parity"].is_number());
}

/// Reads SSE messages until `count` have arrived.
async fn read_events(body: &mut Body, count: usize) -> Vec<EventMessage> {
    let mut out = Vec::new();
    let mut text = String::new();
    while out.len() < count {
        let frame = tokio::time::timeout(Duration::from_secs(20), body.frame())
            .await
            .expect("event stream stalled")
            .expect("stream ended")
            .unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
        while let Some(end) = text.find("\n\n") {
            let block: String = text.drain(..end + 2).collect();
            let mut id = None;
            let mut kind = None;
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("data:") {
                    let msg: EventMessage = serde_json::from_str(v.trim()).unwrap();
                    assert_eq!(Some(msg.sequence.to_string()), id.clone());
                    assert_eq!(Some(msg.kind.clone()), kind.clone());
                    out.push(msg);
                } else if let Some(v) = line.strip_prefix("id:") {
                    id = Some(v.trim().to_string());
                } else if let Some(v) = line.strip_prefix("event:") {
                    kind = Some(v.trim().to_string());
                }
            }
        }
    }
    out
}

async fn open_stream(c: &Client, uri: &str, headers: &[(&str, &str)]) -> Body {
    let mut req = Request::builder().uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let resp = c.app.clone().oneshot(req.body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    resp.into_body()
}

#[tokio::test]
async fn event_stream_resumes_without_gaps() {
    let c = Client::new();
    let id = c.create(6).await;
    let tokens = c.join_all(&id).await;
    let uri = format!("/games/{id}/events");

    // live subscriber from the start sees joins, then actions as they happen
    let mut live = open_stream(&c, &format!("{uri}?from=1"), &[]).await;
    let joins = read_events(&mut live, 5).await;
    assert!(joins.iter().all(|e| e.kind == "state-changed" && e.engine_sequence == 0));

    play_to_conclusion(&c, &id, &tokens).await;
    let (_, state) = c.call("GET", &format!("/games/{id}/state"), &[], None).await;
    assert_eq!(state["status"], "concluded");

    let mut all = joins;
    let rest = read_events(&mut live, 1).await;
    all.extend(rest);
    let total = {
        let mut probe = open_stream(&c, &format!("{uri}?from=1"), &[]).await;
        // the full history is at least what we saw; read until `concluded`
        let mut seen = Vec::new();
        while seen.last().is_none_or(|e: &EventMessage| e.kind != "concluded") {
            seen.extend(read_events(&mut probe, 1).await);
        }
        seen
    };
    while all.len() < total.len() {
        all.extend(read_events(&mut live, 1).await);
    }
    assert_eq!(all, total);
    let seqs: Vec<u64> = all.iter().map(|e| e.sequence).collect();
    assert_eq!(seqs, (1..=all.len() as u64).collect::<Vec<_>>());
    for kind in ["turn-advanced", "vote-opened", "concluded"] {
        assert!(all.iter().any(|e| e.kind == kind), "{kind}");
    }
    assert!(all.iter().all(|e| e.snapshot == format!("/games/{id}/state")));

    // resume after event 7 by header and by query
    let mut resumed = open_stream(&c, &uri, &[("last-event-id", "7")]).await;
    let tail = read_events(&mut resumed, total.len() - 7).await;
    assert_eq!(tail, total[7..]);
    let mut resumed = open_stream(&c, &format!("{uri}?from=8"), &[]).await;
    assert_eq!(read_events(&mut resumed, 1).await[0], total[7]);
}
