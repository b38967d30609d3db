//! HTTP routes.
//!
//! | method | path                      | body / headers                           |
//! |--------|---------------------------|------------------------------------------|
//! | GET    | `/games`                  |                                          |
//! | POST   | `/games`                  | game config JSON, `Idempotency-Key`      |
//! | POST   | `/games/{id}/join`        | `{"role": "..."}`                        |
//! | GET    | `/games/{id}/state`       | `?edge=A -> B` selects the heat map edge |
//! | POST   | `/games/{id}/actions`     | action JSON, bearer token, `Idempotency-Key` |
//! | GET    | `/games/{id}/export`      |                                          |
//! | GET    | `/games/{id}/events`      | `?from=N` or `Last-Event-ID`; SSE        |

use std::collections::VecDeque;
use std::convert::Infallible;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use debias_core::causal::Edge;
use debias_core::engine::GameConfig;
use futures::Stream;
use serde::Deserialize;
use serde_json::json;

use crate::error::ServiceError;
use crate::store::{ActionRequest, EventMessage, GameService};

pub fn router(service: GameService) -> Router {
    Router::new()
        .route("/games", get(list_games).post(create_game))
        .route("/games/{id}/join", post(join_game))
        .route("/games/{id}/state", get(state))
        .route("/games/{id}/actions", post(submit))
        .route("/games/{id}/export", get(export))
        .route("/games/{id}/events", get(events))
        .with_state(service)
}

fn header<'a>(headers: &'a HeaderMap, name: &str) -> Option<&'a str> {
    headers.get(name).and_then(|v| v.to_str().ok())
}

fn idempotency_key(headers: &HeaderMap) -> Option<String> {
    header(headers, "idempotency-key").map(str::to_string)
}

fn bearer(headers: &HeaderMap) -> Result<&str, ServiceError> {
    header(headers, "authorization")
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .ok_or(ServiceError::Unauthorized)
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

/// Runs blocking store work off the async workers.
async fn blocking<R: Send + 'static>(
    f: impl FnOnce() -> Result<R, ServiceError> + Send + 'static,
) -> Result<R, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e)))?
}

async fn list_games(State(service): State<GameService>) -> Json<serde_json::Value> {
    Json(json!({ "games": service.game_ids() }))
}

async fn create_game(State(service): State<GameService>, headers: HeaderMap, body: Bytes) -> Result<Response, ServiceError> {
    let text = std::str::from_utf8(&body).map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    let config = GameConfig::from_json(text)?;
    let key = idempotency_key(&headers);
    let id = blocking(move || service.create_game(config, key)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "game_id": id }))).into_response())
}

#[derive(Deserialize)]
struct JoinBody {
    role: String,
}

async fn join_game(
    State(service): State<GameService>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let JoinBody { role } = parse_json(&body)?;
    let session = blocking(move || service.join_game(&id, &role)).await?;
    Ok((StatusCode::CREATED, Json(session)).into_response())
}

#[derive(Deserialize)]
struct StateQuery {
    edge: Option<String>,
}

async fn state(
    State(service): State<GameService>,
    Path(id): Path<String>,
    Query(q): Query<StateQuery>,
) -> Result<Response, ServiceError> {
    let edge: Option<Edge> = q
        .edge
        .map(|e| e.parse().map_err(|e: debias_core::causal::CausalError| ServiceError::BadRequest(e.to_string())))
        .transpose()?;
    let view = blocking(move || service.view(&id, edge.as_ref())).await?;
    Ok(Json(view).into_response())
}

async fn submit(
    State(service): State<GameService>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let token = bearer(&headers)?.to_string();
    let request: ActionRequest = parse_json(&body)?;
    let key = idempotency_key(&headers);
    let ack = blocking(move || service.submit(&id, &token, request, key)).await?;
    Ok(Json(ack).into_response())
}

async fn export(State(service): State<GameService>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let bundle = blocking(move || service.export(&id)).await?;
    Ok(Json(bundle).into_response())
}

#[derive(Deserialize)]
struct EventsQuery {
    from: Option<u64>,
}

struct Feed {
    service: GameService,
    id: String,
    rx: tokio::sync::watch::Receiver<u64>,
    next: u64,
    buf: VecDeque<EventMessage>,
}

fn to_sse(message: &EventMessage) -> Event {
    Event::default()
        .id(message.sequence.to_string())
        .event(message.kind.clone())
        .data(serde_json::to_string(message).expect("events serialize"))
}

fn feed(state: Feed) -> impl Stream<Item = Result<Event, Infallible>> {
    futures::stream::unfold(state, |mut st| async move {
        loop {
            if let Some(message) = st.buf.pop_front() {
                st.next = message.sequence + 1;
                return Some((Ok(to_sse(&message)), st));
            }
            // mark seen before reading so a concurrent event wakes us
            st.rx.borrow_and_update();
            let batch = st.service.events_from(&st.id, st.next).ok()?;
            if batch.is_empty() {
                st.rx.changed().await.ok()?;
            } else {
                st.buf.extend(batch);
            }
        }
    })
}

async fn events(
    State(service): State<GameService>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    let resume = header(&headers, "last-event-id").and_then(|v| v.trim().parse::<u64>().ok()).map(|n| n + 1);
    let next = q.from.or(resume).unwrap_or(1).max(1);
    let rx = service.subscribe(&id)?;
    let stream = feed(Feed {
        service,
        id,
        rx,
        next,
        buf: VecDeque::new(),
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()).into_response())
}
