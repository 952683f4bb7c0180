use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use kanapad::service::{router, AppState, EventBody, ManualClock, StateView};
use kanapad_core::{Digit, Event, KeyId, KeyTrie, KeypadLayout, Lexicon, Mode, Session, SyllabaryTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

const FIXTURE: &str = include_str!("../../core/testdata/fixture.dict");
const IDLE: Duration = Duration::from_secs(60);

fn parts() -> (Arc<KeyTrie>, Arc<KeypadLayout>) {
    let table = SyllabaryTable::packaged();
    let layout = KeypadLayout::packaged(table);
    let lex = Lexicon::parse(FIXTURE, table).unwrap();
    let trie = KeyTrie::build(&lex, &layout).unwrap();
    (Arc::new(trie), Arc::new(layout))
}

fn app() -> (Router, Arc<AppState>, Arc<ManualClock>) {
    let (trie, layout) = parts();
    let clock = Arc::new(ManualClock::new());
    let state = Arc::new(AppState::new(trie, layout, clock.clone(), IDLE).unwrap());
    (router(state.clone()), state, clock)
}

async fn send(app: &Router, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b)
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn create(app: &Router) -> String {
    let (status, body) = send(app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    body["id"].as_str().unwrap().to_string()
}

async fn event(app: &Router, id: &str, body: Value) -> (StatusCode, Value) {
    send(
        app,
        Method::POST,
        &format!("/sessions/{id}/events"),
        Some(body.to_string()),
    )
    .await
}

async fn digit(app: &Router, id: &str, key: &str) -> (StatusCode, Value) {
    event(app, id, json!({"type": "digit", "key": key})).await
}

#[tokio::test]
async fn create_returns_uuid() {
    let (app, state, _) = app();
    let id = create(&app).await;
    assert!(uuid::Uuid::parse_str(&id).is_ok(), "{id}");
    assert_ne!(create(&app).await, id);
    assert_eq!(state.session_count(), 2);
}

#[tokio::test]
async fn two_digits_give_three_candidates() {
    let (app, _, _) = app();
    let id = create(&app).await;
    let (status, _) = digit(&app, &id, "1").await;
    assert_eq!(status, StatusCode::OK);
    let (status, view) = digit(&app, &id, "3").await;
    assert_eq!(status, StatusCode::OK);
    let candidates = view["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 3);
    assert_eq!(
        candidates[0],
        json!({"reading": "あさ", "source": "exact", "frequency": 5000})
    );
    assert_eq!(candidates[1]["reading"], "いし");
    assert_eq!(
        candidates[2],
        json!({"reading": "あさひ", "source": "prediction", "frequency": 800})
    );
    assert_eq!(view["pending"], "13");
    assert_eq!(view["cursor"], Value::Null);
    assert_eq!(view["stage"], "entering");
    assert_eq!(view["formCursor"], 0);
    assert_eq!(view["forms"], json!([]));
    assert_eq!(view["committed"], "");

    let (status, got) = send(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(got, view);
}

#[tokio::test]
async fn select_convert_commit() {
    let (app, _, _) = app();
    let id = create(&app).await;
    digit(&app, &id, "1").await;
    digit(&app, &id, "3").await;
    event(&app, &id, json!({"type": "select"})).await;
    let (_, view) = event(&app, &id, json!({"type": "select"})).await;
    assert_eq!(view["cursor"], 1);
    assert_eq!(view["stage"], "cyclingReading");
    assert_eq!(view["forms"], json!(["石", "医師", "意思"]));
    event(&app, &id, json!({"type": "convert"})).await;
    let (_, view) = event(&app, &id, json!({"type": "convert"})).await;
    assert_eq!(view["stage"], "cyclingForm");
    let (status, view) = event(&app, &id, json!({"type": "commit"})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["committed"], "医師");
    assert_eq!(view["pending"], "");
}

#[tokio::test]
async fn unknown_session_is_404() {
    let (app, _, _) = app();
    let missing = uuid::Uuid::new_v4();
    let (status, _) = send(&app, Method::GET, &format!("/sessions/{missing}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = digit(&app, &missing.to_string(), "1").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&app, Method::GET, "/sessions/not-a-uuid", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&app, Method::DELETE, &format!("/sessions/{missing}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_events_are_400() {
    let (app, _, _) = app();
    let id = create(&app).await;
    let uri = format!("/sessions/{id}/events");
    let bad = [
        "not json".to_string(),
        json!({"key": "1"}).to_string(),
        json!({"type": "press"}).to_string(),
        json!({"type": "digit"}).to_string(),
        json!({"type": "digit", "key": "12"}).to_string(),
        json!({"type": "digit", "key": "x"}).to_string(),
        json!({"type": "select", "key": "1"}).to_string(),
    ];
    for body in bad {
        let (status, value) = send(&app, Method::POST, &uri, Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(
            value["error"].as_str().is_some_and(|e| !e.is_empty()),
            "{body}: {value}"
        );
    }
    let (_, view) = send(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(view["pending"], "");
}

#[tokio::test]
async fn engine_rejections_are_422() {
    let (app, _, _) = app();
    let id = create(&app).await;
    digit(&app, &id, "9").await;
    let (status, value) = event(&app, &id, json!({"type": "commit"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(value["code"], "no-match");
    assert!(value["error"].as_str().is_some());
    let (status, value) = event(&app, &id, json!({"type": "convert"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(value["code"], "not-selecting");
    let (_, view) = send(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(view["pending"], "9");
}

#[tokio::test]
async fn delete_ends_session() {
    let (app, state, _) = app();
    let id = create(&app).await;
    let (status, body) = send(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert_eq!(body, Value::Null);
    let (status, _) = send(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(state.session_count(), 0);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let (app, _, clock) = app();
    let id = create(&app).await;
    clock.advance(IDLE);
    let (status, _) = digit(&app, &id, "1").await;
    assert_eq!(status, StatusCode::OK, "exactly at the limit is still live");
    clock.advance(IDLE - Duration::from_secs(1));
    let (status, _) = send(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK, "activity refreshed the deadline");
    clock.advance(IDLE + Duration::from_secs(1));
    let (status, _) = send(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = digit(&app, &id, "1").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sweep_drops_idle_sessions() {
    let (app, state, clock) = app();
    create(&app).await;
    create(&app).await;
    clock.advance(IDLE + Duration::from_secs(1));
    let fresh = create(&app).await;
    assert_eq!(state.session_count(), 1);
    state.sweep();
    let (status, _) = send(&app, Method::GET, &format!("/sessions/{fresh}"), None).await;
    assert_eq!(status, StatusCode::OK);
}

fn random_event(rng: &mut ChaCha8Rng) -> Event {
    match rng.random_range(0..20) {
        0..=9 => Event::Key(KeyId::Digit(Digit::new(rng.random_range(0..10)).unwrap())),
        10 => Event::Key(KeyId::Star),
        11 | 12 => Event::Select,
        13 => Event::Convert,
        14 | 15 => Event::Commit,
        16 | 17 => Event::Backspace,
        18 => Event::Advance,
        _ => Event::Mode,
    }
}

#[tokio::test]
async fn http_matches_engine() {
    let (app, _, _) = app();
    let (trie, layout) = parts();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let id = create(&app).await;
        let mut local = Session::new(trie.clone(), layout.clone(), Mode::Disambiguation).unwrap();
        for _ in 0..60 {
            let ev = random_event(&mut rng);
            let body = serde_json::to_value(EventBody::from(ev)).unwrap();
            let (status, value) = event(&app, &id, body).await;
            match local.apply(ev) {
                Ok(_) => {
                    assert_eq!(status, StatusCode::OK, "{ev}");
                    let view: StateView = serde_json::from_value(value).unwrap();
                    assert_eq!(view, StateView::of(&local), "{ev}");
                }
                Err(e) => {
                    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{ev}");
                    assert_eq!(value["code"], kanapad_core::tape::error_code(&e));
                }
            }
        }
        let (_, value) = send(&app, Method::GET, &format!("/sessions/{id}"), None).await;
        let view: StateView = serde_json::from_value(value).unwrap();
        assert_eq!(view, StateView::of(&local));
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_events_are_serialized() {
    let (app, _, _) = app();
    let id = create(&app).await;
    let n = 24;
    let mut tasks = Vec::new();
    for _ in 0..n {
        let app = app.clone();
        let id = id.clone();
        tasks.push(tokio::spawn(async move { digit(&app, &id, "1").await }));
    }
    let mut lengths = Vec::new();
    for t in tasks {
        let (status, view) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        lengths.push(view["pending"].as_str().unwrap().len());
    }
    lengths.sort_unstable();
    assert_eq!(lengths, (1..=n).collect::<Vec<_>>());
}
