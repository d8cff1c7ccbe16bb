//! HTTP front end for `ras-core`.
//!
//! [`api::router`] builds the axum application over a [`FileStore`]; the
//! `ras` binary wires it to a listener and adds a few offline commands.

pub mod api;
pub mod archive;
pub mod error;

use std::sync::Arc;

use ras_core::generation::ZoneTable;
use ras_core::store::FileStore;

/// Shared by every request handler.
#[derive(Debug, Clone)]
pub struct AppState {
    pub store: Arc<FileStore>,
    pub zones: Arc<ZoneTable>,
}

impl AppState {
    pub fn new(store: FileStore, zones: ZoneTable) -> Self {
        AppState { store: Arc::new(store), zones: Arc::new(zones) }
    }
}
