//! Revisioned document persistence with bulk import/export.
//!
//! A [`Dataset`] holds the current corpus behind an `Arc` so readers take
//! cheap snapshots while writers build the next state off to the side,
//! validate it and swap it in. Writers are serialized by one mutex; imports
//! go through the same mutex and therefore exclude all other writes.

mod backend;
mod bundle;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use backend::{Backend, FileBackend, MemoryBackend};
pub use bundle::{ImportBundle, FORMAT_VERSION};

use crate::geo::{CachedLookup, GeocodeOutcome, GeocodeProvider, Geocoder};
use crate::model::{
    validate_corpus, Collection, Corpus, Event, Issue, Output, Project, SubGeography, Topic, ValidationReport, Voice,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("unsupported format_version `{0}`")]
    Version(String),
    #[error("validation failed with {} error(s)", .0.errors.len())]
    Validation(Box<ValidationReport>),
    #[error("revision conflict on {collection}/{id}: expected {expected}, current {current}")]
    Conflict {
        collection: Collection,
        id: String,
        expected: u64,
        current: u64,
    },
    #[error("{collection}/{id} not found")]
    NotFound { collection: Collection, id: String },
    #[error("no dataset has been imported")]
    NoDataset,
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("storage i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportMode {
    Replace,
    Merge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub revision: u64,
    pub updated_at: DateTime<Utc>,
}

/// One stored document with its revision metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentEnvelope {
    pub collection: Collection,
    pub id: String,
    pub body: Value,
    pub revision: u64,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollectionCounts {
    /// Documents of this collection present in the bundle.
    pub in_bundle: usize,
    pub created: usize,
    pub updated: usize,
    pub unchanged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportReport {
    pub mode: ImportMode,
    pub counts: BTreeMap<Collection, CollectionCounts>,
    pub warnings: Vec<Issue>,
}

/// On-disk form of a dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PersistedState {
    pub loaded: bool,
    pub bundle: ImportBundle,
    pub documents: BTreeMap<Collection, BTreeMap<String, DocMeta>>,
    #[serde(default)]
    pub geocode_cache: BTreeMap<String, CachedLookup>,
}

/// Immutable view of the dataset at one point in time.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    loaded: bool,
    corpus: Corpus,
    documents: BTreeMap<Collection, BTreeMap<String, DocMeta>>,
    geocode_cache: BTreeMap<String, CachedLookup>,
}

impl Snapshot {
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    /// Whether an import has ever committed.
    pub fn is_loaded(&self) -> bool {
        self.loaded
    }

    pub fn revision(&self, collection: Collection, id: &str) -> Option<u64> {
        self.meta(collection, id).map(|m| m.revision)
    }

    pub fn meta(&self, collection: Collection, id: &str) -> Option<DocMeta> {
        self.documents.get(&collection)?.get(id).copied()
    }

    pub fn geocode_cache(&self) -> &BTreeMap<String, CachedLookup> {
        &self.geocode_cache
    }

    pub fn document(&self, collection: Collection, id: &str) -> Option<DocumentEnvelope> {
        let meta = self.meta(collection, id)?;
        let c = &self.corpus;
        let body = match collection {
            Collection::Project => c.project.as_ref().filter(|p| p.id.as_str() == id).map(serde_json::to_value),
            Collection::Events => c.events.iter().find(|d| d.id.as_str() == id).map(serde_json::to_value),
            Collection::Voices => c.voices.iter().find(|d| d.id.as_str() == id).map(serde_json::to_value),
            Collection::SubGeographies => {
                c.sub_geographies.iter().find(|d| d.id.as_str() == id).map(serde_json::to_value)
            }
            Collection::Topics => c.topics.iter().find(|d| d.id.as_str() == id).map(serde_json::to_value),
            Collection::Outputs => c.outputs.iter().find(|d| d.id.as_str() == id).map(serde_json::to_value),
        }?
        .expect("documents serialize");
        Some(DocumentEnvelope {
            collection,
            id: id.to_owned(),
            body,
            revision: meta.revision,
            updated_at: meta.updated_at,
        })
    }

    fn to_persisted(&self) -> PersistedState {
        PersistedState {
            loaded: self.loaded,
            bundle: ImportBundle::from_corpus(&self.corpus),
            documents: self.documents.clone(),
            geocode_cache: self.geocode_cache.clone(),
        }
    }

    fn from_persisted(p: PersistedState) -> Result<Self, StoreError> {
        Ok(Self {
            loaded: p.loaded,
            corpus: p.bundle.into_corpus()?,
            documents: p.documents,
            geocode_cache: p.geocode_cache,
        })
    }

    fn bump(&mut self, collection: Collection, id: &str, now: DateTime<Utc>) -> u64 {
        let meta = self
            .documents
            .entry(collection)
            .or_default()
            .entry(id.to_owned())
            .or_insert(DocMeta { revision: 0, updated_at: now });
        meta.revision += 1;
        meta.updated_at = now;
        let rev = meta.revision;
        if collection == Collection::Outputs {
            if let Some(o) = self.corpus.output_mut(id) {
                o.revision = rev;
            }
        }
        rev
    }
}

pub struct Dataset {
    backend: Box<dyn Backend>,
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

impl std::fmt::Debug for Dataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dataset").finish_non_exhaustive()
    }
}

impl Dataset {
    pub fn open(backend: impl Backend + 'static) -> Result<Self, StoreError> {
        let snapshot = match backend.load()? {
            Some(p) => Snapshot::from_persisted(p)?,
            None => Snapshot::default(),
        };
        Ok(Self {
            backend: Box::new(backend),
            current: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(()),
        })
    }

    pub fn in_memory() -> Self {
        Self::open(MemoryBackend::new()).expect("memory backend starts empty")
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.current.read().expect("dataset lock poisoned"))
    }

    fn commit(&self, next: Snapshot) -> Result<(), StoreError> {
        self.backend.save(&next.to_persisted())?;
        *self.current.write().expect("dataset lock poisoned") = Arc::new(next);
        Ok(())
    }

    pub fn import_text(&self, text: &str, mode: ImportMode) -> Result<ImportReport, StoreError> {
        self.import_bundle(ImportBundle::parse(text)?, mode)
    }

    /// All-or-nothing import. `Replace` swaps the whole dataset; `Merge`
    /// upserts by id and bumps the revision of every document whose body
    /// changed.
    pub fn import_bundle(&self, bundle: ImportBundle, mode: ImportMode) -> Result<ImportReport, StoreError> {
        bundle.check_version()?;
        let _guard = self.writer.lock().expect("writer lock poisoned");
        let current = self.snapshot();
        let now = Utc::now();
        let in_bundle = bundle.counts();
        let mut counts: BTreeMap<Collection, CollectionCounts> = in_bundle
            .iter()
            .map(|(c, n)| (*c, CollectionCounts { in_bundle: *n, ..CollectionCounts::default() }))
            .collect();

        let next = match mode {
            ImportMode::Replace => {
                let corpus = bundle.into_corpus()?;
                let mut documents: BTreeMap<Collection, BTreeMap<String, DocMeta>> = BTreeMap::new();
                let mut record = |collection: Collection, id: &str, revision: u64| {
                    documents
                        .entry(collection)
                        .or_default()
                        .insert(id.to_owned(), DocMeta { revision, updated_at: now });
                };
                if let Some(p) = &corpus.project {
                    record(Collection::Project, p.id.as_str(), 1);
                }
                for d in &corpus.events {
                    record(Collection::Events, d.id.as_str(), 1);
                }
                for d in &corpus.voices {
                    record(Collection::Voices, d.id.as_str(), 1);
                }
                for d in &corpus.sub_geographies {
                    record(Collection::SubGeographies, d.id.as_str(), 1);
                }
                for d in &corpus.topics {
                    record(Collection::Topics, d.id.as_str(), 1);
                }
                for d in &corpus.outputs {
                    record(Collection::Outputs, d.id.as_str(), d.revision.max(1));
                }
                let mut corpus = corpus;
                for o in corpus.outputs.iter_mut() {
                    o.revision = o.revision.max(1);
                }
                for (c, n) in in_bundle {
                    counts.get_mut(&c).expect("all collections counted").created = n;
                }
                Snapshot {
                    loaded: true,
                    corpus,
                    documents,
                    geocode_cache: current.geocode_cache.clone(),
                }
            }
            ImportMode::Merge => {
                if !current.loaded {
                    return Err(StoreError::NoDataset);
                }
                let incoming = bundle.into_corpus()?;
                let mut next = (*current).clone();
                let mut changes: Vec<(Collection, String, bool)> = Vec::new();
                if let Some(p) = incoming.project {
                    let existing = next.corpus.project.as_ref();
                    match existing {
                        Some(e) if *e == p => changes.push((Collection::Project, p.id.0.clone(), false)),
                        _ => {
                            changes.push((Collection::Project, p.id.0.clone(), true));
                            next.corpus.project = Some(p);
                        }
                    }
                }
                merge_into(&mut next.corpus.events, incoming.events, |d| d.id.as_str(), Collection::Events, &mut changes);
                merge_into(&mut next.corpus.voices, incoming.voices, |d| d.id.as_str(), Collection::Voices, &mut changes);
                merge_into(
                    &mut next.corpus.sub_geographies,
                    incoming.sub_geographies,
                    |d| d.id.as_str(),
                    Collection::SubGeographies,
                    &mut changes,
                );
                merge_into(&mut next.corpus.topics, incoming.topics, |d| d.id.as_str(), Collection::Topics, &mut changes);
                let outputs: Vec<Output> = incoming
                    .outputs
                    .into_iter()
                    .map(|mut o| {
                        // the stored revision is authoritative, never the body's
                        o.revision = current.revision(Collection::Outputs, o.id.as_str()).unwrap_or(0);
                        o
                    })
                    .collect();
                merge_into(&mut next.corpus.outputs, outputs, |d| d.id.as_str(), Collection::Outputs, &mut changes);

                for (collection, id, changed) in changes {
                    let entry = counts.get_mut(&collection).expect("all collections counted");
                    let existed = current.revision(collection, &id).is_some();
                    match (existed, changed) {
                        (true, false) => entry.unchanged += 1,
                        (true, true) => entry.updated += 1,
                        (false, _) => entry.created += 1,
                    }
                    if changed || !existed {
                        next.bump(collection, &id, now);
                    }
                }
                next
            }
        };

        let report = validate_corpus(&next.corpus);
        if !report.is_valid() {
            return Err(StoreError::Validation(Box::new(report)));
        }
        self.commit(next)?;
        Ok(ImportReport {
            mode,
            counts,
            warnings: report.warnings,
        })
    }

    pub fn export_bundle(&self) -> ImportBundle {
        ImportBundle::from_corpus(self.snapshot().corpus())
    }

    pub fn get_document(&self, collection: Collection, id: &str) -> Option<DocumentEnvelope> {
        self.snapshot().document(collection, id)
    }

    /// Optimistic single-document write. `expected_revision` must equal the
    /// stored revision (0 to create). Output link edits are mirrored onto
    /// counterpart outputs, and event phase changes are copied onto the
    /// event's voices, in the same atomic step. The write is rejected if the
    /// resulting corpus fails validation.
    pub fn write_document(
        &self,
        collection: Collection,
        id: &str,
        mut body: Value,
        expected_revision: u64,
    ) -> Result<u64, StoreError> {
        match body.as_object_mut() {
            Some(obj) => match obj.get("id") {
                None => {
                    obj.insert("id".to_owned(), Value::String(id.to_owned()));
                }
                Some(Value::String(s)) if s == id => {}
                Some(other) => {
                    return Err(StoreError::InvalidDocument(format!("body id {other} does not match path id `{id}`")))
                }
            },
            None => return Err(StoreError::InvalidDocument("body must be an object".to_owned())),
        }

        let _guard = self.writer.lock().expect("writer lock poisoned");
        let current = self.snapshot();
        let stored = current.revision(collection, id).unwrap_or(0);
        if stored != expected_revision {
            return Err(StoreError::Conflict {
                collection,
                id: id.to_owned(),
                expected: expected_revision,
                current: stored,
            });
        }

        let now = Utc::now();
        let mut next = (*current).clone();
        let mut also_touched: Vec<(Collection, String)> = Vec::new();
        let bad = |e: serde_json::Error| StoreError::InvalidDocument(e.to_string());
        let corpus = &mut next.corpus;
        match collection {
            Collection::Project => {
                let p: Project = serde_json::from_value(body).map_err(bad)?;
                if let Some(existing) = &corpus.project {
                    if existing.id != p.id {
                        let report = ValidationReport {
                            errors: vec![crate::model::multiple_projects_issue(2)],
                            warnings: Vec::new(),
                        };
                        return Err(StoreError::Validation(Box::new(report)));
                    }
                }
                corpus.project = Some(p);
            }
            Collection::Events => {
                let e: Event = serde_json::from_value(body).map_err(bad)?;
                for v in corpus.voices.iter_mut().filter(|v| v.event_id == e.id && v.phase_id != e.phase_id) {
                    v.phase_id = e.phase_id.clone();
                    also_touched.push((Collection::Voices, v.id.0.clone()));
                }
                upsert(&mut corpus.events, e, |d| d.id.as_str());
            }
            Collection::Voices => {
                let v: Voice = serde_json::from_value(body).map_err(bad)?;
                upsert(&mut corpus.voices, v, |d| d.id.as_str());
            }
            Collection::SubGeographies => {
                let g: SubGeography = serde_json::from_value(body).map_err(bad)?;
                upsert(&mut corpus.sub_geographies, g, |d| d.id.as_str());
            }
            Collection::Topics => {
                let t: Topic = serde_json::from_value(body).map_err(bad)?;
                upsert(&mut corpus.topics, t, |d| d.id.as_str());
            }
            Collection::Outputs => {
                let mut o: Output = serde_json::from_value(body).map_err(bad)?;
                let (old_sparked, old_next) = corpus
                    .output(id)
                    .map(|old| (old.sparked_by.clone(), old.next_steps.clone()))
                    .unwrap_or_default();
                let new_sparked = std::mem::replace(&mut o.sparked_by, old_sparked.clone());
                let new_next = std::mem::replace(&mut o.next_steps, old_next.clone());
                let oid = o.id.clone();
                upsert(&mut corpus.outputs, o, |d| d.id.as_str());
                let touched = corpus.repair_links(&oid, &old_sparked, &old_next, new_sparked, new_next);
                also_touched.extend(touched.into_iter().map(|t| (Collection::Outputs, t.0)));
            }
        }

        let report = validate_corpus(&next.corpus);
        if !report.is_valid() {
            return Err(StoreError::Validation(Box::new(report)));
        }
        let revision = next.bump(collection, id, now);
        for (c, other) in also_touched {
            next.bump(c, &other, now);
        }
        self.commit(next)?;
        Ok(revision)
    }

    /// Persists geocoder cache entries alongside the dataset.
    pub fn store_geocode_cache(&self, entries: BTreeMap<String, CachedLookup>) -> Result<(), StoreError> {
        let _guard = self.writer.lock().expect("writer lock poisoned");
        let mut next = (*self.snapshot()).clone();
        next.geocode_cache.extend(entries);
        self.commit(next)
    }

    /// Resolves `location_text` to coordinates for every voice that has text
    /// but no coordinates. Voices whose text stays unresolved keep no
    /// coordinates and remain off the map.
    pub fn geocode_missing<P: GeocodeProvider>(&self, geocoder: &Geocoder<P>) -> Result<GeocodeSummary, StoreError> {
        geocoder.seed_cache(self.snapshot().geocode_cache.clone());
        let _guard = self.writer.lock().expect("writer lock poisoned");
        let current = self.snapshot();
        let mut next = (*current).clone();
        let now = Utc::now();
        let mut summary = GeocodeSummary::default();
        let mut touched = BTreeSet::new();
        for v in next.corpus.voices.iter_mut() {
            let (None, Some(text)) = (v.coordinates, v.location_text.as_deref()) else {
                continue;
            };
            if text.trim().is_empty() {
                continue;
            }
            summary.attempted += 1;
            match geocoder.geocode(text) {
                Ok(GeocodeOutcome::Resolved(r)) => {
                    v.coordinates = Some(r.coordinates);
                    touched.insert(v.id.0.clone());
                    summary.resolved += 1;
                }
                Ok(GeocodeOutcome::Unresolved { .. }) | Err(_) => summary.unresolved += 1,
            }
        }
        let tagged = crate::geo::assign_sub_geographies(&mut next.corpus);
        summary.tagged_sub_geography = tagged.len();
        touched.extend(tagged.into_iter().map(|id| id.0));
        for id in &touched {
            next.bump(Collection::Voices, id, now);
        }
        next.geocode_cache.extend(geocoder.cache_entries());
        self.commit(next)?;
        Ok(summary)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeocodeSummary {
    pub attempted: usize,
    pub resolved: usize,
    pub unresolved: usize,
    /// Voices newly placed in a sub-geography by their coordinates.
    pub tagged_sub_geography: usize,
}

fn upsert<T>(items: &mut Vec<T>, item: T, key: impl Fn(&T) -> &str) {
    match items.iter().position(|d| key(d) == key(&item)) {
        Some(i) => items[i] = item,
        None => items.push(item),
    }
}

fn merge_into<T: PartialEq>(
    items: &mut Vec<T>,
    incoming: Vec<T>,
    key: impl Fn(&T) -> &str,
    collection: Collection,
    changes: &mut Vec<(Collection, String, bool)>,
) {
    let mut positions: std::collections::HashMap<String, usize> =
        items.iter().enumerate().map(|(i, d)| (key(d).to_owned(), i)).collect();
    for item in incoming {
        let id = key(&item).to_owned();
        match positions.get(&id) {
            Some(&i) => {
                let changed = items[i] != item;
                if changed {
                    items[i] = item;
                }
                changes.push((collection, id, changed));
            }
            None => {
                positions.insert(id.clone(), items.len());
                items.push(item);
                changes.push((collection, id, true));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IssueCode, OutputId, TopicId};
    use crate::synth::small_fixture;
    use serde_json::json;

    fn loaded() -> Dataset {
        let ds = Dataset::in_memory();
        ds.import_bundle(ImportBundle::from_corpus(&small_fixture()), ImportMode::Replace).unwrap();
        ds
    }

    #[test]
    fn replace_counts_equal_array_lengths() {
        let c = small_fixture();
        let ds = Dataset::in_memory();
        let r = ds.import_bundle(ImportBundle::from_corpus(&c), ImportMode::Replace).unwrap();
        assert_eq!(r.counts[&Collection::Voices].created, c.voices.len());
        assert_eq!(r.counts[&Collection::Outputs].created, c.outputs.len());
        assert_eq!(r.counts[&Collection::Project].created, 1);
    }

    #[test]
    fn dangling_topic_rejects_whole_import() {
        let ds = loaded();
        let before = ds.export_bundle().to_text();
        let mut c = small_fixture();
        c.voices[2].topic_ids.insert(TopicId::from("missing"));
        c.voices[3].text = "changed".into();
        let err = ds.import_bundle(ImportBundle::from_corpus(&c), ImportMode::Replace).unwrap_err();
        match err {
            StoreError::Validation(r) => assert!(r.has_code(IssueCode::DanglingTopic)),
            other => panic!("{other:?}"),
        }
        assert_eq!(ds.export_bundle().to_text(), before);
    }

    #[test]
    fn merge_requires_existing_dataset() {
        let ds = Dataset::in_memory();
        let err = ds.import_bundle(ImportBundle::from_corpus(&small_fixture()), ImportMode::Merge).unwrap_err();
        assert!(matches!(err, StoreError::NoDataset));
    }

    #[test]
    fn create_then_stale_write_conflicts() {
        let ds = loaded();
        let mut topic = serde_json::to_value(&ds.snapshot().corpus().topics[0]).unwrap();
        topic["id"] = json!("t-new");
        topic["name"] = json!("Brand new");
        topic["color_index"] = json!(99);
        assert_eq!(ds.write_document(Collection::Topics, "t-new", topic.clone(), 0).unwrap(), 1);
        assert_eq!(ds.write_document(Collection::Topics, "t-new", topic.clone(), 1).unwrap(), 2);
        let err = ds.write_document(Collection::Topics, "t-new", topic, 1).unwrap_err();
        assert!(matches!(err, StoreError::Conflict { expected: 1, current: 2, .. }));
        assert_eq!(ds.snapshot().revision(Collection::Topics, "t-new"), Some(2));
    }

    #[test]
    fn invalid_write_rolls_back() {
        let ds = loaded();
        let snap = ds.snapshot();
        let v = &snap.corpus().voices[0];
        let mut body = serde_json::to_value(v).unwrap();
        body["event_id"] = json!("nowhere");
        let err = ds.write_document(Collection::Voices, v.id.as_str(), body, 1).unwrap_err();
        assert!(matches!(err, StoreError::Validation(_)));
        assert_eq!(ds.snapshot().revision(Collection::Voices, v.id.as_str()), Some(1));
        assert_eq!(ds.snapshot().corpus(), snap.corpus());
    }

    #[test]
    fn output_write_mirrors_links_and_bumps_counterparts() {
        let ds = loaded();
        let snap = ds.snapshot();
        let goal = snap.corpus().outputs.iter().find(|o| o.kind == crate::model::OutputKind::Goal).unwrap();
        let insight = snap.corpus().outputs.iter().find(|o| o.kind == crate::model::OutputKind::Insight).unwrap();
        let goal_rev = snap.revision(Collection::Outputs, goal.id.as_str()).unwrap();
        let mut body = serde_json::to_value(insight).unwrap();
        let mut next: BTreeSet<OutputId> = insight.next_steps.clone();
        let added = !next.contains(&goal.id);
        next.insert(goal.id.clone());
        body["next_steps"] = serde_json::to_value(&next).unwrap();
        let rev = snap.revision(Collection::Outputs, insight.id.as_str()).unwrap();
        ds.write_document(Collection::Outputs, insight.id.as_str(), body, rev).unwrap();
        let after = ds.snapshot();
        assert!(after.corpus().output(goal.id.as_str()).unwrap().sparked_by.contains(&insight.id));
        if added {
            assert_eq!(after.revision(Collection::Outputs, goal.id.as_str()), Some(goal_rev + 1));
            assert_eq!(after.corpus().output(goal.id.as_str()).unwrap().revision, goal_rev + 1);
        }
    }

    #[test]
    fn event_phase_change_cascades_to_voices() {
        let ds = loaded();
        let snap = ds.snapshot();
        let ev = snap.corpus().voices[0].event_id.clone();
        let event = snap.corpus().events.iter().find(|e| e.id == ev).unwrap();
        let other = snap.corpus().phases().iter().find(|p| p.id != event.phase_id).unwrap().id.clone();
        let mut body = serde_json::to_value(event).unwrap();
        body["phase_id"] = json!(other.as_str());
        ds.write_document(Collection::Events, ev.as_str(), body, 1).unwrap();
        let after = ds.snapshot();
        for v in after.corpus().voices.iter().filter(|v| v.event_id == ev) {
            assert_eq!(v.phase_id, other);
            assert_eq!(after.revision(Collection::Voices, v.id.as_str()), Some(2));
        }
    }

    #[test]
    fn body_id_must_match() {
        let ds = loaded();
        let err = ds.write_document(Collection::Topics, "a", json!({"id": "b", "name": "x", "color_index": 1}), 0);
        assert!(matches!(err, Err(StoreError::InvalidDocument(_))));
    }

    #[test]
    fn file_backend_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let text = {
            let ds = Dataset::open(FileBackend::new(dir.path()).unwrap()).unwrap();
            ds.import_bundle(ImportBundle::from_corpus(&small_fixture()), ImportMode::Replace).unwrap();
            let v = ds.snapshot().corpus().voices[0].clone();
            let mut body = serde_json::to_value(&v).unwrap();
            body["text"] = json!("edited");
            ds.write_document(Collection::Voices, v.id.as_str(), body, 1).unwrap();
            ds.export_bundle().to_text()
        };
        let reopened = Dataset::open(FileBackend::new(dir.path()).unwrap()).unwrap();
        assert_eq!(reopened.export_bundle().to_text(), text);
        let id = reopened.snapshot().corpus().voices[0].id.clone();
        assert_eq!(reopened.snapshot().revision(Collection::Voices, id.as_str()), Some(2));
    }
}
