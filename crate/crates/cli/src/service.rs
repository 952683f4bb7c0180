//! HTTP session service for keypad front ends.
//!
//! Routes:
//!
//! - `POST /sessions` creates a session and answers `201 {"id": ...}`.
//! - `POST /sessions/{id}/events` applies one event and answers the new state.
//! - `GET /sessions/{id}` answers the current state.
//! - `DELETE /sessions/{id}` ends a session (`204`).
//!
//! Unknown or expired ids give 404, malformed events 400, and events the
//! engine rejects 422. Sessions idle longer than the configured limit expire.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kanapad_core::tape::error_code;
use kanapad_core::{EngineError, Event, KeyId, KeyTrie, KeypadLayout, Mode, Session, SessionState};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

/// Monotonic time source, injectable so tests can move time forward.
pub trait Clock: Send + Sync {
    /// Time elapsed since some fixed origin.
    fn now(&self) -> Duration;
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> SystemClock {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// A clock that only moves when told to.
#[derive(Default)]
pub struct ManualClock {
    millis: AtomicU64,
}

impl ManualClock {
    pub fn new() -> ManualClock {
        ManualClock::default()
    }

    pub fn advance(&self, by: Duration) {
        let ms = u64::try_from(by.as_millis()).unwrap_or(u64::MAX);
        self.millis.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        Duration::from_millis(self.millis.load(Ordering::SeqCst))
    }
}

struct Slot {
    session: Session,
    last_used: Duration,
}

/// Shared service state: one index, many sessions.
pub struct AppState {
    trie: Arc<KeyTrie>,
    layout: Arc<KeypadLayout>,
    clock: Arc<dyn Clock>,
    idle_limit: Duration,
    sessions: Mutex<HashMap<Uuid, Arc<Mutex<Slot>>>>,
}

impl AppState {
    pub fn new(
        trie: Arc<KeyTrie>,
        layout: Arc<KeypadLayout>,
        clock: Arc<dyn Clock>,
        idle_limit: Duration,
    ) -> Result<AppState, EngineError> {
        // Surface a layout mismatch at startup rather than per request.
        Session::new(trie.clone(), layout.clone(), Mode::Disambiguation)?;
        Ok(AppState {
            trie,
            layout,
            clock,
            idle_limit,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session table poisoned").len()
    }

    fn expired(&self, slot: &Slot, now: Duration) -> bool {
        now.saturating_sub(slot.last_used) > self.idle_limit
    }

    /// Drops every session idle past the limit.
    pub fn sweep(&self) {
        let now = self.clock.now();
        let mut table = self.sessions.lock().expect("session table poisoned");
        table.retain(|_, slot| match slot.try_lock() {
            Ok(s) => !self.expired(&s, now),
            // In use right now, so not idle.
            Err(_) => true,
        });
    }

    fn create(&self) -> Uuid {
        let session = Session::new(self.trie.clone(), self.layout.clone(), Mode::Disambiguation)
            .expect("checked at construction");
        let id = Uuid::new_v4();
        let slot = Slot {
            session,
            last_used: self.clock.now(),
        };
        self.sessions
            .lock()
            .expect("session table poisoned")
            .insert(id, Arc::new(Mutex::new(slot)));
        id
    }

    fn lookup(&self, id: &str) -> Option<(Uuid, Arc<Mutex<Slot>>)> {
        let id = Uuid::parse_str(id).ok()?;
        let mut table = self.sessions.lock().expect("session table poisoned");
        let slot = table.get(&id)?.clone();
        let stale = self.expired(&slot.lock().expect("session poisoned"), self.clock.now());
        if stale {
            table.remove(&id);
            return None;
        }
        Some((id, slot))
    }

    fn remove(&self, id: &str) -> bool {
        match self.lookup(id) {
            Some((id, _)) => self
                .sessions
                .lock()
                .expect("session table poisoned")
                .remove(&id)
                .is_some(),
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateView {
    pub reading: String,
    pub source: String,
    pub frequency: u64,
}

/// Session state as sent to clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateView {
    pub mode: String,
    pub committed: String,
    pub pending: String,
    pub candidates: Vec<CandidateView>,
    pub cursor: Option<usize>,
    pub stage: String,
    pub form_cursor: usize,
    pub forms: Vec<String>,
}

impl StateView {
    pub fn of(session: &Session) -> StateView {
        let s: &SessionState = session.state();
        let forms = s
            .cursor()
            .map(|c| {
                session
                    .trie()
                    .entry(s.candidates()[c].entry)
                    .forms
                    .iter()
                    .map(|f| f.surface.clone())
                    .collect()
            })
            .unwrap_or_default();
        StateView {
            mode: s.mode().to_string(),
            committed: s.committed().to_string(),
            pending: s.pending_label(),
            candidates: s
                .candidates()
                .iter()
                .map(|c| CandidateView {
                    reading: c.reading.clone(),
                    source: c.source.as_str().to_string(),
                    frequency: c.frequency,
                })
                .collect(),
            cursor: s.cursor(),
            stage: s.stage().to_string(),
            form_cursor: s.form_cursor(),
            forms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventBody {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
}

impl EventBody {
    pub fn to_event(&self) -> Result<Event, String> {
        let event = match self.kind.as_str() {
            "digit" => {
                let key = self.key.as_deref().ok_or("digit event needs a key")?;
                let mut chars = key.chars();
                match (chars.next().and_then(KeyId::from_label), chars.next()) {
                    (Some(k), None) => Event::Key(k),
                    _ => return Err(format!("bad key {key:?}")),
                }
            }
            "select" => Event::Select,
            "convert" => Event::Convert,
            "commit" => Event::Commit,
            "backspace" => Event::Backspace,
            "advance" => Event::Advance,
            "mode" => Event::Mode,
            other => return Err(format!("unknown event type {other:?}")),
        };
        if self.kind != "digit" && self.key.is_some() {
            return Err(format!("{} event takes no key", self.kind));
        }
        Ok(event)
    }
}

impl From<Event> for EventBody {
    fn from(event: Event) -> EventBody {
        let (kind, key) = match event {
            Event::Key(k) => ("digit", Some(k.label().to_string())),
            Event::Select => ("select", None),
            Event::Convert => ("convert", None),
            Event::Commit => ("commit", None),
            Event::Backspace => ("backspace", None),
            Event::Advance => ("advance", None),
            Event::Mode => ("mode", None),
        };
        EventBody {
            kind: kind.to_string(),
            key,
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    code: Option<&'static str>,
}

enum ApiError {
    NotFound,
    BadRequest(String),
    Rejected(EngineError),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound => (
                StatusCode::NOT_FOUND,
                ErrorBody {
                    error: "no such session".to_string(),
                    code: None,
                },
            ),
            ApiError::BadRequest(reason) => (
                StatusCode::BAD_REQUEST,
                ErrorBody {
                    error: reason,
                    code: None,
                },
            ),
            ApiError::Rejected(e) => (
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorBody {
                    error: e.to_string(),
                    code: Some(error_code(&e)),
                },
            ),
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Serialize)]
struct Created {
    id: String,
}

async fn create_session(State(app): State<Arc<AppState>>) -> impl IntoResponse {
    app.sweep();
    let id = app.create();
    (StatusCode::CREATED, Json(Created { id: id.to_string() }))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<StateView>, ApiError> {
    let (_, slot) = app.lookup(&id).ok_or(ApiError::NotFound)?;
    let mut slot = slot.lock().expect("session poisoned");
    slot.last_used = app.clock.now();
    Ok(Json(StateView::of(&slot.session)))
}

async fn post_event(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<EventBody>, JsonRejection>,
) -> Result<Json<StateView>, ApiError> {
    let (_, slot) = app.lookup(&id).ok_or(ApiError::NotFound)?;
    let Json(body) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let event = body.to_event().map_err(ApiError::BadRequest)?;
    let mut slot = slot.lock().expect("session poisoned");
    slot.last_used = app.clock.now();
    slot.session.apply(event).map_err(ApiError::Rejected)?;
    Ok(Json(StateView::of(&slot.session)))
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if app.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::NotFound)
    }
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/events", post(post_event))
        .with_state(app)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_bodies_round_trip() {
        for kind in ["select", "convert", "commit", "backspace", "advance", "mode"] {
            let body = EventBody {
                kind: kind.to_string(),
                key: None,
            };
            assert_eq!(EventBody::from(body.to_event().unwrap()), body);
        }
        for key in ["0", "5", "9", "*", "#"] {
            let body = EventBody {
                kind: "digit".to_string(),
                key: Some(key.to_string()),
            };
            assert_eq!(EventBody::from(body.to_event().unwrap()), body);
        }
    }

    #[test]
    fn malformed_bodies_are_rejected() {
        let bad = [
            ("digit", None),
            ("digit", Some("12")),
            ("digit", Some("a")),
            ("press", None),
            ("select", Some("1")),
        ];
        for (kind, key) in bad {
            let body = EventBody {
                kind: kind.to_string(),
                key: key.map(str::to_string),
            };
            assert!(body.to_event().is_err(), "{body:?}");
        }
    }

    #[test]
    fn manual_clock_advances() {
        let clock = ManualClock::new();
        assert_eq!(clock.now(), Duration::ZERO);
        clock.advance(Duration::from_secs(5));
        assert_eq!(clock.now(), Duration::from_secs(5));
    }
}
