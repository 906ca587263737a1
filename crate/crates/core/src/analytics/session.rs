use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::record::{AnalyticsRecord, DeviceType, EventKind, Page, StoredRecord};
use super::AnalyticsError;
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_id: String,
    pub duration_minutes: f64,
    /// Pages in visit order with consecutive repeats collapsed.
    pub pages_visited: Vec<Page>,
    pub event_counts: BTreeMap<EventKind, usize>,
    /// Most frequent heartbeat device; `None` without heartbeats.
    pub device_type: Option<DeviceType>,
    pub used_translate: bool,
    /// Events plus heartbeats.
    pub record_count: usize,
    pub first_seen: DateTime<Utc>,
    pub last_seen: DateTime<Utc>,
}

impl SessionMetrics {
    pub fn count(&self, kind: EventKind) -> usize {
        self.event_counts.get(&kind).copied().unwrap_or(0)
    }
}

/// Metrics for one session from its records (any order).
pub fn session_metrics(session_id: &str, records: &[&StoredRecord]) -> Result<SessionMetrics, AnalyticsError> {
    let mut recs: Vec<&StoredRecord> = records.iter().copied().filter(|r| r.record.session_id() == session_id).collect();
    if recs.is_empty() {
        return Err(AnalyticsError::UnknownSession(session_id.to_owned()));
    }
    // client clocks first, server receive order as tiebreak
    recs.sort_by(|a, b| a.record.timestamp().cmp(&b.record.timestamp()).then(a.seq.cmp(&b.seq)));

    let first = recs[0].record.timestamp();
    let last = recs[recs.len() - 1].record.timestamp();
    let mut pages_visited: Vec<Page> = Vec::new();
    let mut event_counts = BTreeMap::new();
    let mut devices: HashMap<DeviceType, usize> = HashMap::new();
    for r in &recs {
        let page = r.record.page();
        if pages_visited.last() != Some(&page) {
            pages_visited.push(page);
        }
        match &r.record {
            AnalyticsRecord::Event(e) => *event_counts.entry(e.kind).or_insert(0) += 1,
            AnalyticsRecord::Heartbeat(h) => *devices.entry(h.device_type).or_insert(0) += 1,
        }
    }
    let device_type = devices
        .into_iter()
        .min_by(|(da, ca), (db, cb)| cb.cmp(ca).then(da.cmp(db)))
        .map(|(d, _)| d);
    Ok(SessionMetrics {
        session_id: session_id.to_owned(),
        duration_minutes: (last - first).num_milliseconds() as f64 / 60_000.0,
        pages_visited,
        used_translate: event_counts.contains_key(&EventKind::TranslateToggle),
        event_counts,
        device_type,
        record_count: recs.len(),
        first_seen: first,
        last_seen: last,
    })
}

/// Metrics for every session in `records`, sorted by session id.
pub fn all_session_metrics(records: &[StoredRecord], exec: Execution) -> Vec<SessionMetrics> {
    let mut groups: BTreeMap<&str, Vec<&StoredRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.record.session_id()).or_default().push(r);
    }
    let groups: Vec<(&str, Vec<&StoredRecord>)> = groups.into_iter().collect();
    exec.map(&groups, |(id, recs)| session_metrics(id, recs).expect("group is non-empty"))
}

/// Number of sessions dropped for a fraction: `ceil(fraction · n)`.
pub fn outlier_count(n: usize, top_fraction: f64) -> usize {
    // 1e-9 absorbs representation error such as 0.05 · 100 = 5.000000000000001
    ((top_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Drops the `ceil(top_fraction · N)` sessions with the most records (ties
/// broken by ascending session id). Returns `(kept, removed)`, each in input
/// order.
pub fn filter_outliers(
    sessions: Vec<SessionMetrics>,
    top_fraction: f64,
) -> Result<(Vec<SessionMetrics>, Vec<SessionMetrics>), AnalyticsError> {
    if !(0.0..1.0).contains(&top_fraction) {
        return Err(AnalyticsError::InvalidFraction(top_fraction));
    }
    let k = outlier_count(sessions.len(), top_fraction);
    let mut ranked: Vec<usize> = (0..sessions.len()).collect();
    ranked.sort_by(|&a, &b| {
        sessions[b]
            .record_count
            .cmp(&sessions[a].record_count)
            .then_with(|| sessions[a].session_id.cmp(&sessions[b].session_id))
    });
    let mut drop = vec![false; sessions.len()];
    for &i in &ranked[..k] {
        drop[i] = true;
    }
    let (removed, kept): (Vec<_>, Vec<_>) = sessions.into_iter().zip(drop).partition(|(_, d)| *d);
    Ok((kept.into_iter().map(|(s, _)| s).collect(), removed.into_iter().map(|(s, _)| s).collect()))
}

pub type TransitionCounts = BTreeMap<(Page, Page), usize>;

/// Counts consecutive page pairs over each session's collapsed page path.
pub fn transition_graph(sessions: &[SessionMetrics]) -> TransitionCounts {
    let mut counts = TransitionCounts::new();
    for s in sessions {
        for w in s.pages_visited.windows(2) {
            *counts.entry((w[0], w[1])).or_insert(0) += 1;
        }
    }
    counts
}
