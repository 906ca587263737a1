use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::record::{AnalyticsRecord, Page, StoredRecord};
use super::AnalyticsError;

/// Record type a line is assumed to have when it carries no `type` field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordType {
    Event,
    Heartbeat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    /// 1-based line number within the batch.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub duplicates: usize,
    pub rejected: Vec<Rejected>,
}

type DedupKey = (String, DateTime<Utc>, &'static str, Page);

#[derive(Default)]
struct Inner {
    records: Vec<StoredRecord>,
    seen: HashSet<DedupKey>,
}

/// Append-only usage log, optionally mirrored to a newline-delimited file.
pub struct AnalyticsLog {
    inner: Mutex<Inner>,
    path: Option<PathBuf>,
}

impl std::fmt::Debug for AnalyticsLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticsLog").field("path", &self.path).finish_non_exhaustive()
    }
}

impl Default for AnalyticsLog {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl AnalyticsLog {
    pub const FILE_NAME: &'static str = "analytics.ndjson";

    pub fn in_memory() -> Self {
        Self { inner: Mutex::new(Inner::default()), path: None }
    }

    /// Opens (or creates) the log file `analytics.ndjson` inside `data_dir`.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, AnalyticsError> {
        let dir = data_dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| AnalyticsError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(Self::FILE_NAME);
        let mut inner = Inner::default();
        match fs::read_to_string(&path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let stored: StoredRecord = serde_json::from_str(line)
                        .map_err(|e| AnalyticsError::Io(format!("{}:{}: {e}", path.display(), i + 1)))?;
                    inner.seen.insert(stored.record.dedup_key());
                    inner.records.push(stored);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(AnalyticsError::Io(format!("{}: {e}", path.display()))),
        }
        Ok(Self { inner: Mutex::new(inner), path: Some(path) })
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("analytics log poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of all stored records in receive order.
    pub fn records(&self) -> Vec<StoredRecord> {
        self.inner.lock().expect("analytics log poisoned").records.clone()
    }

    /// Appends already-parsed records, dropping exact replays.
    pub fn ingest(&self, batch: Vec<AnalyticsRecord>) -> Result<IngestReport, AnalyticsError> {
        let mut report = IngestReport::default();
        let mut valid = Vec::with_capacity(batch.len());
        for (i, r) in batch.into_iter().enumerate() {
            if r.session_id().trim().is_empty() {
                report.rejected.push(Rejected { line: i + 1, reason: "empty session_id".to_owned() });
            } else {
                valid.push(r);
            }
        }
        self.append(valid, &mut report)?;
        Ok(report)
    }

    /// Parses a newline-delimited batch. Malformed lines are rejected one by
    /// one; the rest of the batch still goes in.
    pub fn ingest_ndjson(&self, text: &str, default_type: Option<RecordType>) -> Result<IngestReport, AnalyticsError> {
        let mut report = IngestReport::default();
        let mut valid = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match parse_line(line, default_type) {
                Ok(r) => valid.push(r),
                Err(reason) => report.rejected.push(Rejected { line: i + 1, reason }),
            }
        }
        self.append(valid, &mut report)?;
        Ok(report)
    }

    fn append(&self, records: Vec<AnalyticsRecord>, report: &mut IngestReport) -> Result<(), AnalyticsError> {
        let mut inner = self.inner.lock().expect("analytics log poisoned");
        let mut fresh = Vec::new();
        for record in records {
            if !inner.seen.insert(record.dedup_key()) {
                report.duplicates += 1;
                continue;
            }
            let seq = inner.records.len() as u64 + fresh.len() as u64;
            fresh.push(StoredRecord { seq, record });
        }
        if let (Some(path), false) = (&self.path, fresh.is_empty()) {
            let mut buf = String::new();
            for r in &fresh {
                buf.push_str(&serde_json::to_string(r).expect("records serialize"));
                buf.push('\n');
            }
            let io = |e: std::io::Error| AnalyticsError::Io(format!("{}: {e}", path.display()));
            let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
            if let Err(e) = f.write_all(buf.as_bytes()) {
                for r in &fresh {
                    inner.seen.remove(&r.record.dedup_key());
                }
                return Err(io(e));
            }
        }
        report.accepted += fresh.len();
        inner.records.extend(fresh);
        Ok(())
    }

    /// All stored records as newline-delimited text.
    pub fn export_ndjson(&self) -> String {
        let inner = self.inner.lock().expect("analytics log poisoned");
        inner
            .records
            .iter()
            .map(|r| serde_json::to_string(&r.record).expect("records serialize") + "\n")
            .collect()
    }
}

fn parse_line(line: &str, default_type: Option<RecordType>) -> Result<AnalyticsRecord, String> {
    let mut value: Value = serde_json::from_str(line).map_err(|e| format!("malformed json: {e}"))?;
    let obj = value.as_object_mut().ok_or("record must be an object")?;
    if !obj.contains_key("type") {
        let t = match default_type {
            Some(RecordType::Event) => "event",
            Some(RecordType::Heartbeat) => "heartbeat",
            None => return Err("missing `type`".to_owned()),
        };
        obj.insert("type".to_owned(), Value::String(t.to_owned()));
    }
    let record: AnalyticsRecord = serde_json::from_value(value).map_err(|e| format!("invalid record: {e}"))?;
    if record.session_id().trim().is_empty() {
        return Err("empty session_id".to_owned());
    }
    Ok(record)
}
