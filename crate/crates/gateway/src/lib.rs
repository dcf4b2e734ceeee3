//! HTTP+JSON gateway.
//!
//! Each route maps onto one chaincode method. Mutations go through the
//! full submit path and answer with a commit receipt; reads are served by
//! simulation only. The route's role is checked from the bearer token
//! before the ledger is touched, and the chaincode checks again.

mod auth;
mod error;
mod routes;

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::Router;
use ehr_core::Network;

pub use auth::{Auth, Claims, TokenKeys};
pub use error::ApiError;

pub struct AppState {
    pub network: Arc<Network>,
    pub tokens: TokenKeys,
}

impl AppState {
    /// Token key drawn from the network generator; lifetime from the
    /// network configuration.
    pub fn new(network: Arc<Network>) -> Self {
        let secret = network.random_bytes(32);
        let lifetime = network.config().gateway.token_lifetime_secs;
        AppState {
            tokens: TokenKeys::new(&secret, lifetime),
            network,
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    routes::routes().with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    network: Arc<Network>,
    addr: SocketAddr,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(Arc::new(AppState::new(network)));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("gateway listening on {}", listener.local_addr()?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
