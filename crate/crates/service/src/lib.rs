//! Session-oriented HTTP front end to the comparison pipeline.
//!
//! | method | path | body / result |
//! |---|---|---|
//! | POST | `/api/sessions` | multipart `fileA`, `fileB`, optional `formats`, `direction` → session summary |
//! | GET | `/api/sessions/{id}` | full session state |
//! | POST | `/api/sessions/{id}/rules` | rule JSON → `{"rule_id": ...}` |
//! | DELETE | `/api/sessions/{id}/rules/{rid}` | 204 |
//! | POST | `/api/sessions/{id}/update` | match result |
//! | GET | `/api/sessions/{id}/inventory/{a\|b}` | design inventory |
//!
//! Requests on one session are serialized; different sessions run
//! concurrently.

pub mod api;
pub mod error;
pub mod session;
pub mod store;

use std::net::SocketAddr;

pub use api::{router, AppState};
pub use error::ServiceError;
pub use session::{RuleDraft, Session, SessionSummary};
pub use store::SessionStore;

/// Serves on an already bound listener until the task is cancelled.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Loopback address for `port`; binding elsewhere is an explicit choice.
pub fn loopback(port: u16) -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], port))
}
