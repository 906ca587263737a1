use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::model::{Corpus, Event, Output, Project, SubGeography, Topic, Voice};

/// Bundle format written by this crate.
pub const FORMAT_VERSION: &str = "1.0.0";
const SUPPORTED_MAJOR: u64 = 1;

/// Whole-dataset interchange document: one array per collection.
///
/// `project` is an array so that an empty dataset exports as six empty
/// arrays; a populated dataset holds exactly one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportBundle {
    pub format_version: String,
    #[serde(default)]
    pub project: Vec<Project>,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub voices: Vec<Voice>,
    #[serde(default)]
    pub sub_geographies: Vec<SubGeography>,
    #[serde(default)]
    pub topics: Vec<Topic>,
    #[serde(default)]
    pub outputs: Vec<Output>,
}

impl ImportBundle {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self {
            format_version: FORMAT_VERSION.to_owned(),
            project: corpus.project.iter().cloned().collect(),
            events: corpus.events.clone(),
            voices: corpus.voices.clone(),
            sub_geographies: corpus.sub_geographies.clone(),
            topics: corpus.topics.clone(),
            outputs: corpus.outputs.clone(),
        }
    }

    /// Parses bundle text and checks the format version.
    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let bundle: ImportBundle = serde_json::from_str(text).map_err(|e| StoreError::Parse(e.to_string()))?;
        bundle.check_version()?;
        Ok(bundle)
    }

    pub fn check_version(&self) -> Result<(), StoreError> {
        let major = parse_semver(&self.format_version)
            .ok_or_else(|| StoreError::Version(self.format_version.clone()))?
            .0;
        if major != SUPPORTED_MAJOR {
            return Err(StoreError::Version(self.format_version.clone()));
        }
        Ok(())
    }

    /// Canonical text form: pretty-printed with a trailing newline.
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    /// Splits into a corpus. Fails with [`StoreError::Validation`] when more
    /// than one project is present.
    pub fn into_corpus(self) -> Result<Corpus, StoreError> {
        if self.project.len() > 1 {
            let report = crate::model::ValidationReport {
                errors: vec![crate::model::multiple_projects_issue(self.project.len())],
                warnings: Vec::new(),
            };
            return Err(StoreError::Validation(Box::new(report)));
        }
        Ok(Corpus {
            project: self.project.into_iter().next(),
            events: self.events,
            sub_geographies: self.sub_geographies,
            topics: self.topics,
            voices: self.voices,
            outputs: self.outputs,
        })
    }

    pub fn counts(&self) -> [(crate::model::Collection, usize); 6] {
        use crate::model::Collection::*;
        [
            (Project, self.project.len()),
            (Events, self.events.len()),
            (Voices, self.voices.len()),
            (SubGeographies, self.sub_geographies.len()),
            (Topics, self.topics.len()),
            (Outputs, self.outputs.len()),
        ]
    }
}

fn parse_semver(v: &str) -> Option<(u64, u64, u64)> {
    let core = v.split(['-', '+']).next()?;
    let mut parts = core.split('.');
    let major = parts.next()?.parse().ok()?;
    let minor = parts.next()?.parse().ok()?;
    let patch = parts.next()?.parse().ok()?;
    parts.next().is_none().then_some((major, minor, patch))
}
