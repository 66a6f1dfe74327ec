//! Session server for drillguide cases.
//!
//! | method | path                      | body                                   |
//! |--------|---------------------------|----------------------------------------|
//! | GET    | `/cases`                  | `["case-id", ...]`                     |
//! | GET    | `/cases/{id}/volume`      | CAPV1 bytes                            |
//! | GET    | `/cases/{id}/plan`        | CAPP1 bytes                            |
//! | POST   | `/sessions`               | `{"case_id", "guidance_enabled"}`      |
//! | POST   | `/sessions/{id}/finish`   | metrics and the persisted log path     |
//! | GET    | `/sessions/{id}/stream`   | websocket of pose and tick frames      |
//!
//! Each session accepts a single stream connection. Frames are handled in
//! arrival order, one tick per pose frame; a frame that fails to parse gets
//! an error frame back and the connection stays open.

pub mod error;
pub mod protocol;
pub mod session;

use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;

pub use error::{ServiceError, ServiceResult};
pub use protocol::{ErrorFrame, OutFrame, PoseFrame, RemovedEntry, TickFrame};
pub use session::{
    Catalog, CreateSession, FinishedSession, Session, SessionDescriptor, SessionManager,
    DEFAULT_MAX_SESSIONS,
};

type AppState = Arc<SessionManager>;

pub fn router(manager: AppState) -> Router {
    Router::new()
        .route("/cases", get(list_cases))
        .route("/cases/{id}/volume", get(case_volume))
        .route("/cases/{id}/plan", get(case_plan))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/finish", post(finish_session))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(manager)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, manager: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(manager)).await
}

async fn list_cases(State(m): State<AppState>) -> Json<Vec<String>> {
    Json(m.catalog().ids())
}

fn octets(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response()
}

async fn case_volume(State(m): State<AppState>, Path(id): Path<String>) -> ServiceResult<Response> {
    Ok(octets(m.catalog().get(&id)?.volume_bytes.clone()))
}

async fn case_plan(State(m): State<AppState>, Path(id): Path<String>) -> ServiceResult<Response> {
    Ok(octets(m.catalog().get(&id)?.plan_bytes.clone()))
}

async fn create_session(
    State(m): State<AppState>,
    Json(req): Json<CreateSession>,
) -> ServiceResult<Json<SessionDescriptor>> {
    m.create(req).map(Json)
}

async fn finish_session(
    State(m): State<AppState>,
    Path(id): Path<String>,
) -> ServiceResult<Json<FinishedSession>> {
    let m = m.clone();
    tokio::task::spawn_blocking(move || m.finish(&id))
        .await
        .expect("finish task panicked")
        .map(Json)
}

async fn stream(
    State(m): State<AppState>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> ServiceResult<Response> {
    let session = m.attach_stream(&id)?;
    Ok(ws.on_upgrade(move |socket| pump(socket, session)))
}

async fn pump(mut socket: WebSocket, session: session::SharedSession) {
    while let Some(Ok(msg)) = socket.recv().await {
        let reply = match msg {
            Message::Text(text) => session.lock().unwrap().handle_frame(text.as_str()),
            Message::Binary(_) => OutFrame::Error(
                ServiceError::MalformedMessage("binary frames are not accepted".into()).frame(),
            ),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        let closed = session.lock().unwrap().is_closed();
        if socket.send(Message::Text(reply.to_json().into())).await.is_err() || closed {
            break;
        }
    }
}
