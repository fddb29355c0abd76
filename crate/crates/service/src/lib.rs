//! HTTP service and command-line front end for the rosetta knowledge base.

pub mod cli;
pub mod config;
pub mod http;
pub mod ops;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use rosetta_kb::KnowledgeBase;
use thiserror::Error;
use tokio::net::TcpListener;

pub use config::ServiceConfig;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data directory {0} is not writable: {1}")]
    DataDirectoryUnwritable(PathBuf, String),
    #[error("address {0} is already in use")]
    AddressInUse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kb(#[from] rosetta_kb::Error),
}

/// Checks the configuration and opens (or creates) the knowledge base in the
/// data directory, replaying its event log.
pub fn open(config: &ServiceConfig) -> Result<KnowledgeBase, ServeError> {
    config.validate()?;
    config.ensure_writable()?;
    Ok(KnowledgeBase::open(config.kb_config())?)
}

pub async fn bind(address: &str) -> Result<TcpListener, ServeError> {
    TcpListener::bind(address).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => ServeError::AddressInUse(address.to_owned()),
        _ => ServeError::Io(e),
    })
}

/// Serves until interrupted. `ready` receives the bound address once
/// requests are accepted.
pub async fn serve(config: ServiceConfig, ready: impl FnOnce(SocketAddr)) -> Result<(), ServeError> {
    config.validate()?;
    config.ensure_writable()?;
    let listener = bind(&config.bind_address).await?;
    let kb = open(&config)?;
    ready(listener.local_addr()?);
    let app = http::router(Arc::new(RwLock::new(kb)));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
