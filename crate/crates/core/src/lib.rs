//! Data layer for a civic engagement portal: the community-input corpus and
//! its citation graph, revisioned storage, query, map clustering and layout,
//! and usage analytics.

pub mod analytics;
pub mod exec;
pub mod geo;
pub mod model;
pub mod query;
pub mod store;
pub mod synth;

pub use exec::Execution;
