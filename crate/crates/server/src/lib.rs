//! HTTP API and `v2v` command line for the engagement portal.
//!
//! GET routes are open to everyone. Edits, imports and the usage report need
//! the planner bearer token (`AUTH_PLANNER_TOKEN`). Telemetry and feedback
//! submissions are accepted from the public role.

pub mod api;
pub mod auth;
pub mod cli;
pub mod error;
pub mod geocoder;
pub mod params;
pub mod views;

pub use api::{router, AppState, StaticDirs};
