//! Domain types for the six collections and the voice-to-output citation graph.
//!
//! The canonical citation edge lives on [`Voice::output_ids`]; everything an
//! output card shows about its cited voices is derived through
//! [`citation_index`]. Every record carries an open `extra` map that absorbs
//! fields this schema does not name, so imported documents round-trip
//! without loss.

mod citations;
mod validate;

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

pub use citations::{citation_index, corpus_stats, CitationIndex, CorpusStats};
pub(crate) use validate::multiple_projects_issue;
pub use validate::{validate_corpus, validate_corpus_with, Issue, IssueCode, Severity, ValidationReport};

/// Open key/value space for fields outside the fixed schema.
pub type Extra = BTreeMap<String, serde_json::Value>;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(ProjectId);
id_type!(PhaseId);
id_type!(EventId);
id_type!(SubGeographyId);
id_type!(TopicId);
id_type!(VoiceId);
id_type!(OutputId);

/// The six stored collections, named as they appear in bundle files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collection {
    Project,
    Events,
    Voices,
    SubGeographies,
    Topics,
    Outputs,
}

impl Collection {
    pub const ALL: [Collection; 6] = [
        Collection::Project,
        Collection::Events,
        Collection::Voices,
        Collection::SubGeographies,
        Collection::Topics,
        Collection::Outputs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Collection::Project => "project",
            Collection::Events => "events",
            Collection::Voices => "voices",
            Collection::SubGeographies => "sub_geographies",
            Collection::Topics => "topics",
            Collection::Outputs => "outputs",
        }
    }
}

impl fmt::Display for Collection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Collection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Collection::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown collection `{s}`"))
    }
}

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: ProjectId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub goals_overview: String,
    #[serde(default)]
    pub phases: Vec<Phase>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseStatus {
    Planned,
    Active,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub id: PhaseId,
    pub name: String,
    pub start_date: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_date: Option<NaiveDate>,
    pub status: PhaseStatus,
    #[serde(default)]
    pub description: String,
    #[serde(flatten)]
    pub extra: Extra,
}

/// A feedback-gathering activity (survey, workshop, tabling, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub name: String,
    #[serde(default)]
    pub kind: String,
    pub phase_id: PhaseId,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGeography {
    pub id: SubGeographyId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Polygon ring, vertices in degrees. Not closed explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<LatLon>>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl SubGeography {
    /// Even-odd ray casting in lat/lon space. `false` without a boundary.
    pub fn contains(&self, p: LatLon) -> bool {
        let Some(ring) = self.boundary.as_deref() else {
            return false;
        };
        let mut inside = false;
        let mut j = ring.len().wrapping_sub(1);
        for (i, a) in ring.iter().enumerate() {
            let b = ring[j];
            if (a.lat > p.lat) != (b.lat > p.lat)
                && p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon
            {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: TopicId,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Palette slot used for dots, bars and layout points.
    pub color_index: u32,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncitedReason {
    InsufficientContext,
    OutsideProjectScope,
    DuplicateOfCited,
    AddressedElsewhere,
    Other,
}

/// Why a voice was not incorporated into any output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncitedRationale {
    pub reason: UncitedReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A single piece of community input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voice {
    pub id: VoiceId,
    pub text: String,
    pub event_id: EventId,
    /// Copy of the event's phase, kept for sorting and filtering.
    pub phase_id: PhaseId,
    #[serde(default)]
    pub topic_ids: BTreeSet<TopicId>,
    /// Outputs citing this voice.
    #[serde(default)]
    pub output_ids: BTreeSet<OutputId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_geography_id: Option<SubGeographyId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<LatLon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncited_rationale: Option<UncitedRationale>,
    pub collected_at: DateTime<Utc>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl Voice {
    pub fn is_cited(&self) -> bool {
        !self.output_ids.is_empty()
    }

    pub fn has_audio(&self) -> bool {
        self.audio_ref.as_deref().is_some_and(|a| !a.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Insight,
    Goal,
    Recommendation,
}

impl OutputKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputKind::Insight => "insight",
            OutputKind::Goal => "goal",
            OutputKind::Recommendation => "recommendation",
        }
    }
}

impl std::str::FromStr for OutputKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "insight" => Ok(OutputKind::Insight),
            "goal" => Ok(OutputKind::Goal),
            "recommendation" | "strategy" => Ok(OutputKind::Recommendation),
            other => Err(format!("unknown output kind `{other}`")),
        }
    }
}

/// A synthesized planning product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub id: OutputId,
    pub kind: OutputKind,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub voice_summary: String,
    #[serde(default)]
    pub sparked_by: BTreeSet<OutputId>,
    #[serde(default)]
    pub next_steps: BTreeSet<OutputId>,
    pub phase_id: PhaseId,
    #[serde(default = "first_revision")]
    pub revision: u64,
    #[serde(flatten)]
    pub extra: Extra,
}

fn first_revision() -> u64 {
    1
}

/// All six collections of one deployment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub project: Option<Project>,
    pub events: Vec<Event>,
    pub sub_geographies: Vec<SubGeography>,
    pub topics: Vec<Topic>,
    pub voices: Vec<Voice>,
    pub outputs: Vec<Output>,
}

/// Borrowed id lookups over a corpus.
pub struct CorpusIndex<'a> {
    pub phases: HashMap<&'a str, (usize, &'a Phase)>,
    pub events: HashMap<&'a str, &'a Event>,
    pub sub_geographies: HashMap<&'a str, &'a SubGeography>,
    pub topics: HashMap<&'a str, &'a Topic>,
    pub voices: HashMap<&'a str, &'a Voice>,
    pub outputs: HashMap<&'a str, &'a Output>,
}

impl CorpusIndex<'_> {
    /// Position of a phase in project order.
    pub fn phase_rank(&self, id: &PhaseId) -> Option<usize> {
        self.phases.get(id.as_str()).map(|(i, _)| *i)
    }
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.project.is_none()
            && self.events.is_empty()
            && self.sub_geographies.is_empty()
            && self.topics.is_empty()
            && self.voices.is_empty()
            && self.outputs.is_empty()
    }

    pub fn phases(&self) -> &[Phase] {
        self.project.as_ref().map(|p| p.phases.as_slice()).unwrap_or(&[])
    }

    pub fn index(&self) -> CorpusIndex<'_> {
        CorpusIndex {
            phases: self
                .phases()
                .iter()
                .enumerate()
                .map(|(i, p)| (p.id.as_str(), (i, p)))
                .collect(),
            events: self.events.iter().map(|e| (e.id.as_str(), e)).collect(),
            sub_geographies: self.sub_geographies.iter().map(|s| (s.id.as_str(), s)).collect(),
            topics: self.topics.iter().map(|t| (t.id.as_str(), t)).collect(),
            voices: self.voices.iter().map(|v| (v.id.as_str(), v)).collect(),
            outputs: self.outputs.iter().map(|o| (o.id.as_str(), o)).collect(),
        }
    }

    pub fn voice(&self, id: &str) -> Option<&Voice> {
        self.voices.iter().find(|v| v.id.as_str() == id)
    }

    pub fn output(&self, id: &str) -> Option<&Output> {
        self.outputs.iter().find(|o| o.id.as_str() == id)
    }

    pub fn output_mut(&mut self, id: &str) -> Option<&mut Output> {
        self.outputs.iter_mut().find(|o| o.id.as_str() == id)
    }

    /// Palette slot for the next topic added.
    pub fn next_color_index(&self) -> u32 {
        self.topics.iter().map(|t| t.color_index + 1).max().unwrap_or(0)
    }

    /// Appends a topic, assigning its palette slot from insertion order.
    pub fn add_topic(&mut self, id: TopicId, name: impl Into<String>, description: impl Into<String>) -> &Topic {
        let color_index = self.next_color_index();
        self.topics.push(Topic {
            id,
            name: name.into(),
            description: description.into(),
            color_index,
            extra: Extra::new(),
        });
        self.topics.last().expect("just pushed")
    }

    /// Replaces the `sparked_by` / `next_steps` sets of one output and
    /// rewrites the mirror edges on every counterpart so that
    /// `a ∈ sparked_by(b) ⇔ b ∈ next_steps(a)` keeps holding. Counterparts
    /// that do not exist are left for validation to report.
    ///
    /// Returns the ids of other outputs whose links changed.
    pub fn set_output_links(
        &mut self,
        id: &OutputId,
        sparked_by: BTreeSet<OutputId>,
        next_steps: BTreeSet<OutputId>,
    ) -> BTreeSet<OutputId> {
        let (old_sparked, old_next) = match self.output(id.as_str()) {
            Some(o) => (o.sparked_by.clone(), o.next_steps.clone()),
            None => return BTreeSet::new(),
        };
        self.repair_links(id, &old_sparked, &old_next, sparked_by, next_steps)
    }

    /// Mirror-edge repair after `id`'s own link sets moved from the `old_*`
    /// values to the new ones. Also used when an output is created.
    pub(crate) fn repair_links(
        &mut self,
        id: &OutputId,
        old_sparked: &BTreeSet<OutputId>,
        old_next: &BTreeSet<OutputId>,
        sparked_by: BTreeSet<OutputId>,
        next_steps: BTreeSet<OutputId>,
    ) -> BTreeSet<OutputId> {
        let mut touched = BTreeSet::new();
        let mut edit = |other: &OutputId, f: &dyn Fn(&mut Output)| {
            if other == id {
                return;
            }
            if let Some(o) = self.output_mut(other.as_str()) {
                let before = (o.sparked_by.len(), o.next_steps.len());
                f(o);
                if before != (o.sparked_by.len(), o.next_steps.len()) {
                    touched.insert(other.clone());
                }
            }
        };
        for gone in old_sparked.difference(&sparked_by) {
            edit(gone, &|o| {
                o.next_steps.remove(id);
            });
        }
        for added in sparked_by.difference(old_sparked) {
            edit(added, &|o| {
                o.next_steps.insert(id.clone());
            });
        }
        for gone in old_next.difference(&next_steps) {
            edit(gone, &|o| {
                o.sparked_by.remove(id);
            });
        }
        for added in next_steps.difference(old_next) {
            edit(added, &|o| {
                o.sparked_by.insert(id.clone());
            });
        }
        if let Some(o) = self.output_mut(id.as_str()) {
            o.sparked_by = sparked_by;
            o.next_steps = next_steps;
        }
        touched
    }
}
