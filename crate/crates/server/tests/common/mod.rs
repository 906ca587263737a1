#![allow(dead_code)]

use std::net::SocketAddr;

use v2v_core::model::Corpus;
use v2v_core::store::{ImportBundle, ImportMode};
use v2v_server::{router, AppState, StaticDirs};

pub const TOKEN: &str = "planner-secret";

/// Serves `state` on an ephemeral local port and returns the base URL.
pub async fn spawn(state: AppState) -> String {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, router(state, StaticDirs::default())).await.unwrap();
    });
    format!("http://{addr}")
}

pub fn loaded_state(corpus: &Corpus) -> AppState {
    let state = AppState::in_memory(Some(TOKEN.to_owned()));
    state.dataset.import_bundle(ImportBundle::from_corpus(corpus), ImportMode::Replace).unwrap();
    state
}

pub fn bearer() -> String {
    format!("Bearer {TOKEN}")
}
