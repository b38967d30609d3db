//! Networked game sessions: a durable store plus an HTTP/SSE front end.

pub mod error;
pub mod http;
pub mod store;

pub use error::{ErrorBody, ServiceError};
pub use http::router;
pub use store::{ActionRequest, Ack, EventMessage, GameService, SessionToken};

/// Serves `service` on an already bound listener until the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener, service: GameService) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
