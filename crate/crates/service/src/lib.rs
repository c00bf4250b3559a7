//! HTTP service for the VRPTW workbench.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;
pub mod views;

use std::sync::Arc;

use tokio::net::TcpListener;

pub use config::Config;
pub use routes::router;
pub use state::AppState;

/// Serves the API on `listener` until the task is dropped.
pub async fn serve(listener: TcpListener, config: Config) -> std::io::Result<()> {
    let state = AppState::new(config).map_err(std::io::Error::other)?;
    axum::serve(listener, router(Arc::new(state))).await
}
