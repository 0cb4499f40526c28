//! HTTP/JSON binding of the session engine.

mod config;
mod error;
mod routes;

use std::future::Future;
use std::sync::Arc;

use counterquill_core::Engine;
use tokio::net::TcpListener;

pub use config::{start, Limits, ProviderConfig, ProviderMode, ServerConfig, StartupError, Startup};
pub use error::{status_for, ApiError, ErrorBody};
pub use routes::{router, AppState};

pub fn app(engine: Arc<Engine>, token: Option<String>) -> axum::Router {
    router(AppState {
        engine,
        token: token.map(Into::into),
    })
}

/// Serves until `shutdown` resolves, then flushes the event log.
pub async fn serve(
    listener: TcpListener,
    engine: Arc<Engine>,
    token: Option<String>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, app(engine.clone(), token))
        .with_graceful_shutdown(shutdown)
        .await?;
    engine.sync().map_err(std::io::Error::other)?;
    tracing::info!("event log flushed");
    Ok(())
}

/// Resolves on Ctrl-C or, on unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
