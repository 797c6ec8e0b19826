//! HTTP front end for interactive annotation sessions.
//!
//! A session proposes one bag at a time, waits for the annotator's instance
//! labels, retrains and proposes the next bag until every positive bag is
//! labeled. Every accepted submission is appended to a per-session JSON-lines
//! event log; replaying the log rebuilds the session exactly because
//! training is deterministic.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/datasets` | | [`api::DatasetList`] |
//! | POST | `/sessions` | [`api::CreateSession`] | [`api::SessionSummary`] |
//! | GET | `/sessions/{id}` | | [`api::SessionSummary`] |
//! | GET | `/sessions/{id}/query` | | [`api::QueryPayload`] |
//! | POST | `/sessions/{id}/labels` | [`api::LabelSubmission`] | [`api::SessionSummary`] |
//! | GET | `/sessions/{id}/curves` | | [`api::CurvesPayload`] |
//!
//! Errors are `{"code": ..., "message": ...}` with status 400, 404 or 409
//! (out-of-order or repeated submission, or a finished session).

pub mod api;
pub mod error;
mod routes;
pub mod state;

use std::sync::Arc;

pub use error::{ErrorBody, ServiceError, ServiceResult};
pub use routes::router;
pub use state::{AppState, ServiceDefaults};

/// Serves `state` on `listener` until Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "annotation service listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
