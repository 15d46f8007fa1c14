use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use vibrocap_core::service::{
    ClockMode, ControlMessage, ErrorCode, ProtocolError, Role, ServerMessage, Session, SessionSettings,
    PROTOCOL_VERSION,
};
use vibrocap_core::SimConfig;

use crate::runner::{spawn, ClientGuard, RunnerOptions, SessionHandle};

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    /// Config for every new session.
    pub sim: SimConfig,
    /// Session defaults; clients may override rate and clock per session.
    pub settings: SessionSettings,
    pub runner: RunnerOptions,
    /// Directory served at `/` (the steering console bundle), if any.
    pub static_dir: Option<PathBuf>,
}

#[derive(Clone)]
struct AppState {
    sessions: Arc<Mutex<HashMap<String, Arc<SessionHandle>>>>,
    config: Arc<ServerConfig>,
}

impl AppState {
    fn live(&self) -> Vec<Arc<SessionHandle>> {
        let mut map = self.sessions.lock().expect("session registry");
        map.retain(|_, h| !h.is_closed());
        map.values().cloned().collect()
    }

    fn find(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.live().into_iter().find(|h| h.id().as_str() == id)
    }
}

/// Routes: `GET /health`, `GET /sessions`, `GET /ws` (new session, caller
/// becomes controller), `GET /ws/{id}` (join; observer unless `role=controller`
/// and the slot is free), plus static files when configured.
pub fn router(config: ServerConfig) -> Router {
    let static_dir = config.static_dir.clone();
    let state = AppState {
        sessions: Arc::default(),
        config: Arc::new(config),
    };
    let app = Router::new()
        .route("/health", get(health))
        .route("/sessions", get(list_sessions))
        .route("/ws", get(create_session))
        .route("/ws/{id}", get(join_session))
        .with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

pub async fn serve(listener: tokio::net::TcpListener, config: ServerConfig) -> std::io::Result<()> {
    axum::serve(listener, router(config)).await
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    protocol: u32,
    sessions: usize,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok",
        protocol: PROTOCOL_VERSION,
        sessions: state.live().len(),
    })
}

#[derive(Serialize)]
struct SessionInfo {
    id: String,
    clients: usize,
    controller: bool,
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<SessionInfo>> {
    let mut out: Vec<_> = state
        .live()
        .iter()
        .map(|h| SessionInfo {
            id: h.id().to_string(),
            clients: h.clients(),
            controller: h.has_controller(),
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Json(out)
}

/// Per-session overrides accepted on `GET /ws`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSessionQuery {
    rate: Option<f64>,
    /// `realtime` or `accelerated`
    clock: Option<String>,
    factor: Option<f64>,
    window: Option<f64>,
}

fn bad_request(field: &str, message: String) -> Response {
    let err = ProtocolError {
        id: None,
        code: ErrorCode::InvalidField,
        field: Some(field.to_string()),
        message,
    };
    (StatusCode::BAD_REQUEST, err.to_message().to_json()).into_response()
}

// cold path; boxing the response buys nothing
#[allow(clippy::result_large_err)]
fn settings_from(base: SessionSettings, q: &NewSessionQuery) -> Result<SessionSettings, Response> {
    let mut s = base;
    if let Some(r) = q.rate {
        s.telemetry_rate = r;
    }
    if let Some(w) = q.window {
        s.speed_window = w;
    }
    s.clock = match (q.clock.as_deref(), q.factor) {
        (None, None) => s.clock,
        (Some("realtime"), None) => ClockMode::Realtime,
        (Some("accelerated") | None, Some(factor)) => ClockMode::Accelerated { factor },
        (Some("accelerated"), None) => return Err(bad_request("factor", "accelerated clock needs a factor".into())),
        (Some(other), _) => return Err(bad_request("clock", format!("unknown clock mode `{other}`"))),
    };
    s.validate().map_err(|e| bad_request(e.field, e.reason))?;
    Ok(s)
}

async fn create_session(
    ws: WebSocketUpgrade,
    State(state): State<AppState>,
    Query(q): Query<NewSessionQuery>,
) -> Response {
    let settings = match settings_from(state.config.settings, &q) {
        Ok(s) => s,
        Err(resp) => return resp,
    };
    let session = match Session::create(state.config.sim.clone(), settings) {
        Ok(s) => s,
        Err(e) => return bad_request("config", e.to_string()),
    };
    let handle = spawn(session, state.config.runner);
    tracing::info!(session = %handle.id(), "session created");
    state
        .sessions
        .lock()
        .expect("session registry")
        .insert(handle.id().to_string(), handle.clone());
    let (role, guard) = handle.connect(Role::Controller);
    ws.on_upgrade(move |socket| client(socket, handle, role, guard))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct JoinQuery {
    role: Option<Role>,
}

async fn join_session(
    ws: WebSocketUpgrade,
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<JoinQuery>,
) -> Response {
    let Some(handle) = state.find(&id) else {
        let err = ProtocolError::new(None, ErrorCode::SessionClosed, format!("no live session `{id}`"));
        return (StatusCode::NOT_FOUND, err.to_message().to_json()).into_response();
    };
    let want = query.role.unwrap_or(Role::Observer);
    let (role, guard) = handle.connect(want);
    ws.on_upgrade(move |socket| client(socket, handle, role, guard))
}

async fn client(socket: WebSocket, handle: Arc<SessionHandle>, role: Role, _guard: ClientGuard) {
    let (mut tx, mut rx) = socket.split();
    let send = |m: ServerMessage| Message::Text(m.to_json().into());
    let Some(hello) = handle.hello(role).await else {
        return;
    };
    if tx.send(send(ServerMessage::Hello(hello))).await.is_err() {
        return;
    }
    let mut telemetry = handle.subscribe();
    telemetry.mark_changed();
    loop {
        tokio::select! {
            changed = telemetry.changed() => {
                if changed.is_err() {
                    break;
                }
                let frame = telemetry.borrow_and_update().clone();
                if tx.send(Message::Text(frame.as_ref().into())).await.is_err() {
                    break;
                }
            }
            incoming = rx.next() => {
                let reply = match incoming {
                    Some(Ok(Message::Text(text))) => reply_to(&handle, role, text.as_str()).await,
                    Some(Ok(Message::Binary(_))) => {
                        ProtocolError::malformed(None, "binary frames are not part of the protocol".into()).to_message()
                    }
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                    Some(Ok(_)) => continue,
                };
                if tx.send(send(reply)).await.is_err() {
                    break;
                }
            }
        }
    }
}

async fn reply_to(handle: &SessionHandle, role: Role, text: &str) -> ServerMessage {
    let msg = match ControlMessage::parse(text) {
        Ok(m) => m,
        Err(e) => return e.to_message(),
    };
    if role != Role::Controller {
        return ProtocolError::new(msg.id(), ErrorCode::NotController, "observers cannot send controls").to_message();
    }
    match handle.control(msg).await {
        Ok(ack) => ServerMessage::Ack(ack),
        Err(e) => e.to_message(),
    }
}
