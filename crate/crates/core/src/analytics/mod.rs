//! Usage telemetry: ingestion of feature events and heartbeats, per-session
//! rollups, outlier filtering, page-transition graph and the usage report.
//!
//! "Users" throughout are anonymous browser session ids.

mod log;
mod record;
mod report;
mod session;

use chrono::NaiveDate;
use thiserror::Error;

pub use log::{AnalyticsLog, IngestReport, RecordType, Rejected};
pub use record::{AnalyticsRecord, DeviceType, EventKind, Heartbeat, Page, StoredRecord, UsageEvent};
pub use report::{
    csv_tables, kept_sessions, mean_sd, usage_report, CitationExpansion, DeviceShare, KindUsage, ReportOptions,
    Transition, UsageReport, DEFAULT_TOP_FRACTION,
};
pub use session::{
    all_session_metrics, filter_outliers, outlier_count, session_metrics, transition_graph, SessionMetrics,
    TransitionCounts,
};

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("top fraction {0} outside [0, 1)")]
    InvalidFraction(f64),
    #[error("date range {from}..{to} is inverted")]
    InvalidRange { from: NaiveDate, to: NaiveDate },
    #[error("analytics storage: {0}")]
    Io(String),
}
