use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::{AnalyticsRecord, DeviceType, EventKind, Page, StoredRecord};
use super::session::{all_session_metrics, filter_outliers, transition_graph, SessionMetrics};
use super::AnalyticsError;
use crate::exec::Execution;
use crate::model::{corpus_stats, Corpus};

pub const DEFAULT_TOP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Inclusive UTC date bounds on record timestamps.
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub outlier_filter: bool,
    pub top_fraction: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            from: None,
            to: None,
            outlier_filter: true,
            top_fraction: DEFAULT_TOP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindUsage {
    pub kind: EventKind,
    /// Sessions with at least one event of this kind.
    pub sessions: usize,
    pub share: f64,
    pub mean_per_session: f64,
    pub sd_per_session: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: Page,
    pub to: Page,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceShare {
    /// `desktop`, `mobile`, `tablet`, or `unknown` for sessions without heartbeats.
    pub device: String,
    pub sessions: usize,
    pub share: f64,
}

/// How often readers opened the citation accordion of uncited voices,
/// compared with how common uncited voices are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationExpansion {
    /// Expansions whose subject is a known voice.
    pub expansions: usize,
    pub on_uncited: usize,
    pub uncited_expansion_share: f64,
    pub corpus_uncited_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    pub n_records: usize,
    pub n_sessions_raw: usize,
    pub n_sessions_after_filter: usize,
    pub removed_session_ids: Vec<String>,
    pub duration_minutes_mean: f64,
    /// Sample standard deviation (n − 1).
    pub duration_minutes_sd: f64,
    pub feature_usage: Vec<KindUsage>,
    pub voice_card_view_share: f64,
    pub goal_card_click_share: f64,
    pub transitions: Vec<Transition>,
    pub total_transitions: usize,
    pub device_shares: Vec<DeviceShare>,
    pub mobile_or_tablet_share: f64,
    pub translate_user_count: usize,
    pub translate_user_share: f64,
    pub citation_expansion: Option<CitationExpansion>,
}

impl UsageReport {
    pub fn usage(&self, kind: EventKind) -> &KindUsage {
        self.feature_usage.iter().find(|u| u.kind == kind).expect("every kind is reported")
    }

    pub fn transition(&self, from: Page, to: Page) -> usize {
        self.transitions.iter().find(|t| t.from == from && t.to == to).map_or(0, |t| t.count)
    }
}

/// `(mean, sample sd)`; sd is 0 below two observations.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn share(n: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        n as f64 / of as f64
    }
}

/// Computes every usage metric over the sessions that survive outlier
/// filtering. `corpus`, when given, enables the citation-expansion comparison.
pub fn usage_report(
    records: &[StoredRecord],
    corpus: Option<&Corpus>,
    opts: &ReportOptions,
    exec: Execution,
) -> Result<UsageReport, AnalyticsError> {
    if let (Some(from), Some(to)) = (opts.from, opts.to) {
        if from > to {
            return Err(AnalyticsError::InvalidRange { from, to });
        }
    }
    let in_range: Vec<StoredRecord> = records
        .iter()
        .filter(|r| {
            let d = r.record.timestamp().date_naive();
            opts.from.is_none_or(|f| d >= f) && opts.to.is_none_or(|t| d <= t)
        })
        .cloned()
        .collect();

    let sessions = all_session_metrics(&in_range, exec);
    let n_raw = sessions.len();
    let (kept, removed) = if opts.outlier_filter {
        filter_outliers(sessions, opts.top_fraction)?
    } else {
        (sessions, Vec::new())
    };
    let n = kept.len();
    let kept_ids: BTreeSet<&str> = kept.iter().map(|s| s.session_id.as_str()).collect();

    let durations: Vec<f64> = kept.iter().map(|s| s.duration_minutes).collect();
    let (duration_mean, duration_sd) = mean_sd(&durations);

    let feature_usage: Vec<KindUsage> = EventKind::ALL
        .iter()
        .map(|&kind| {
            let counts: Vec<f64> = kept.iter().map(|s| s.count(kind) as f64).collect();
            let with = kept.iter().filter(|s| s.count(kind) > 0).count();
            let (mean, sd) = mean_sd(&counts);
            KindUsage {
                kind,
                sessions: with,
                share: share(with, n),
                mean_per_session: mean,
                sd_per_session: sd,
            }
        })
        .collect();
    let kind_share = |k: EventKind| feature_usage.iter().find(|u| u.kind == k).map_or(0.0, |u| u.share);

    let graph = transition_graph(&kept);
    let transitions: Vec<Transition> =
        graph.iter().map(|(&(from, to), &count)| Transition { from, to, count }).collect();
    let total_transitions = graph.values().sum();

    let mut devices: BTreeMap<&'static str, usize> = BTreeMap::new();
    for s in &kept {
        *devices.entry(s.device_type.map_or("unknown", DeviceType::as_str)).or_insert(0) += 1;
    }
    let mobile_or_tablet = devices.get("mobile").copied().unwrap_or(0) + devices.get("tablet").copied().unwrap_or(0);
    let device_shares = devices
        .into_iter()
        .map(|(device, sessions)| DeviceShare { device: device.to_owned(), sessions, share: share(sessions, n) })
        .collect();

    let translate_users = kept.iter().filter(|s| s.used_translate).count();

    let citation_expansion = corpus.map(|c| {
        let uncited: BTreeSet<&str> =
            c.voices.iter().filter(|v| !v.is_cited()).map(|v| v.id.as_str()).collect();
        let known: BTreeSet<&str> = c.voices.iter().map(|v| v.id.as_str()).collect();
        let mut expansions = 0;
        let mut on_uncited = 0;
        for r in &in_range {
            if let AnalyticsRecord::Event(e) = &r.record {
                if e.kind != EventKind::CitationAccordionExpand || !kept_ids.contains(e.session_id.as_str()) {
                    continue;
                }
                let Some(subject) = e.subject_id.as_deref().filter(|s| known.contains(s)) else {
                    continue;
                };
                expansions += 1;
                if uncited.contains(subject) {
                    on_uncited += 1;
                }
            }
        }
        CitationExpansion {
            expansions,
            on_uncited,
            uncited_expansion_share: share(on_uncited, expansions),
            corpus_uncited_share: corpus_stats(c).uncited_fraction,
        }
    });

    Ok(UsageReport {
        n_records: in_range.len(),
        n_sessions_raw: n_raw,
        n_sessions_after_filter: n,
        removed_session_ids: removed.iter().map(|s| s.session_id.clone()).collect(),
        duration_minutes_mean: duration_mean,
        duration_minutes_sd: duration_sd,
        voice_card_view_share: kind_share(EventKind::VoiceCardView),
        goal_card_click_share: kind_share(EventKind::GoalCardClick),
        feature_usage,
        transitions,
        total_transitions,
        device_shares,
        mobile_or_tablet_share: share(mobile_or_tablet, n),
        translate_user_count: translate_users,
        translate_user_share: share(translate_users, n),
        citation_expansion,
    })
}

/// Kept sessions only, for callers that want per-session rows.
pub fn kept_sessions(
    records: &[StoredRecord],
    opts: &ReportOptions,
    exec: Execution,
) -> Result<Vec<SessionMetrics>, AnalyticsError> {
    let sessions = all_session_metrics(records, exec);
    if opts.outlier_filter {
        Ok(filter_outliers(sessions, opts.top_fraction)?.0)
    } else {
        Ok(sessions)
    }
}

/// Report tables as CSV documents keyed by file name.
pub fn csv_tables(report: &UsageReport) -> Result<BTreeMap<&'static str, String>, AnalyticsError> {
    let csv_err = |e: csv::Error| AnalyticsError::Io(e.to_string());
    let finish = |w: csv::Writer<Vec<u8>>| -> Result<String, AnalyticsError> {
        let bytes = w.into_inner().map_err(|e| AnalyticsError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    };
    let mut tables = BTreeMap::new();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "sessions", "share", "mean_per_session", "sd_per_session"]).map_err(csv_err)?;
    for u in &report.feature_usage {
        w.write_record([
            u.kind.as_str().to_owned(),
            u.sessions.to_string(),
            format!("{:.6}", u.share),
            format!("{:.6}", u.mean_per_session),
            format!("{:.6}", u.sd_per_session),
        ])
        .map_err(csv_err)?;
    }
    tables.insert("feature_usage.csv", finish(w)?);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["from", "to", "count"]).map_err(csv_err)?;
    for t in &report.transitions {
        w.write_record([t.from.as_str(), t.to.as_str(), &t.count.to_string()]).map_err(csv_err)?;
    }
    tables.insert("transitions.csv", finish(w)?);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["device", "sessions", "share"]).map_err(csv_err)?;
    for d in &report.device_shares {
        w.write_record([d.device.clone(), d.sessions.to_string(), format!("{:.6}", d.share)]).map_err(csv_err)?;
    }
    tables.insert("devices.csv", finish(w)?);
    Ok(tables)
}
