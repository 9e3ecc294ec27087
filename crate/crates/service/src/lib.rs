//! HTTP front end for screenplay rating: short-text chat, full document
//! upload with progress polling, per-scene reanalysis and reviewer
//! overrides, backed by an embedded SQLite session store.

pub mod error;
pub mod http;
pub mod service;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

pub use error::ServiceError;
pub use http::router;
pub use service::{Service, ServiceConfig};

/// How often the expiry sweep runs while serving.
pub const EXPIRY_INTERVAL: Duration = Duration::from_secs(600);

/// Binds `addr` and serves until Ctrl-C, sweeping expired sessions in the
/// background.
pub async fn serve(service: Arc<Service>, addr: SocketAddr) -> std::io::Result<()> {
    let sweeper = {
        let service = service.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(EXPIRY_INTERVAL);
            loop {
                tick.tick().await;
                let svc = service.clone();
                let _ = tokio::task::spawn_blocking(move || svc.expire_sessions(svc.now())).await;
            }
        })
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let result = axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweeper.abort();
    result
}
