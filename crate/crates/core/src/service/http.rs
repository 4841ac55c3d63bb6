use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;

use super::Service;

/// Every request goes to [`Service::dispatch`] on a blocking thread; store
/// operations do synchronous file IO.
pub fn router(service: Arc<Service>) -> Router {
    Router::new().fallback(handle).with_state(service)
}

async fn handle(State(service): State<Arc<Service>>, method: Method, uri: Uri, body: Bytes) -> Response {
    let path = uri.path().to_string();
    let result =
        tokio::task::spawn_blocking(move || service.dispatch(method.as_str(), &path, &body)).await;
    let (status, value) = match result {
        Ok(r) => r,
        Err(e) => (
            500,
            serde_json::json!({ "error": { "kind": "internal", "message": e.to_string() } }),
        ),
    };
    let status = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        value.to_string(),
    )
        .into_response()
}

/// Serve until Ctrl-C. The store is flushed when the service is dropped.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
