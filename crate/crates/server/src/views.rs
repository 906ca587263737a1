//! Response projections. Community and planner clients receive the same
//! structures; only the set of permitted routes differs.

use chrono::NaiveDate;
use serde::Serialize;
use v2v_core::model::{
    citation_index, corpus_stats, Collection, Corpus, CorpusStats, EventId, Output, OutputId, OutputKind, Phase,
    TopicId, Voice,
};
use v2v_core::query::{topic_distribution, TopicDistribution};
use v2v_core::store::Snapshot;

#[derive(Debug, Serialize)]
pub struct EventSummary<'a> {
    pub id: &'a EventId,
    pub name: &'a str,
    pub kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Serialize)]
pub struct PhaseView<'a> {
    #[serde(flatten)]
    pub phase: &'a Phase,
    pub events: Vec<EventSummary<'a>>,
}

#[derive(Debug, Serialize)]
pub struct ProjectView<'a> {
    pub id: &'a str,
    pub name: &'a str,
    pub description: &'a str,
    pub goals_overview: &'a str,
    pub phases: Vec<PhaseView<'a>>,
    pub stats: CorpusStats,
    pub revision: u64,
}

pub fn project_view<'a>(snap: &'a Snapshot) -> Option<ProjectView<'a>> {
    let corpus = snap.corpus();
    let project = corpus.project.as_ref()?;
    let phases = project
        .phases
        .iter()
        .map(|phase| PhaseView {
            phase,
            events: corpus
                .events
                .iter()
                .filter(|e| e.phase_id == phase.id)
                .map(|e| EventSummary { id: &e.id, name: &e.name, kind: &e.kind, date: e.date })
                .collect(),
        })
        .collect();
    Some(ProjectView {
        id: project.id.as_str(),
        name: &project.name,
        description: &project.description,
        goals_overview: &project.goals_overview,
        phases,
        stats: corpus_stats(corpus),
        revision: snap.revision(Collection::Project, project.id.as_str()).unwrap_or(1),
    })
}

#[derive(Debug, Serialize)]
pub struct TopicRef<'a> {
    pub id: &'a TopicId,
    pub name: &'a str,
    pub color_index: u32,
}

#[derive(Debug, Serialize)]
pub struct OutputRef<'a> {
    pub id: &'a OutputId,
    pub kind: OutputKind,
    pub title: &'a str,
}

#[derive(Debug, Serialize)]
pub struct VoiceCard<'a> {
    #[serde(flatten)]
    pub voice: &'a Voice,
    pub revision: u64,
    pub event_name: Option<&'a str>,
    pub phase_name: Option<&'a str>,
    pub topics: Vec<TopicRef<'a>>,
    pub cited_outputs: Vec<OutputRef<'a>>,
}

pub fn voice_card<'a>(snap: &'a Snapshot, voice: &'a Voice) -> VoiceCard<'a> {
    let corpus = snap.corpus();
    VoiceCard {
        voice,
        revision: snap.revision(Collection::Voices, voice.id.as_str()).unwrap_or(1),
        event_name: corpus.events.iter().find(|e| e.id == voice.event_id).map(|e| e.name.as_str()),
        phase_name: corpus.phases().iter().find(|p| p.id == voice.phase_id).map(|p| p.name.as_str()),
        topics: voice
            .topic_ids
            .iter()
            .filter_map(|t| corpus.topics.iter().find(|x| &x.id == t))
            .map(|t| TopicRef { id: &t.id, name: &t.name, color_index: t.color_index })
            .collect(),
        cited_outputs: voice
            .output_ids
            .iter()
            .filter_map(|o| corpus.output(o.as_str()))
            .map(|o| OutputRef { id: &o.id, kind: o.kind, title: &o.title })
            .collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct OutputCard<'a> {
    #[serde(flatten)]
    pub output: &'a Output,
    pub cited_count: usize,
    pub topic_distribution: TopicDistribution,
}

pub fn output_cards<'a>(corpus: &'a Corpus, outputs: impl IntoIterator<Item = &'a Output>) -> Vec<OutputCard<'a>> {
    let index = citation_index(corpus);
    outputs
        .into_iter()
        .map(|output| OutputCard {
            output,
            cited_count: index.get(&output.id).map_or(0, |s| s.len()),
            topic_distribution: topic_distribution(corpus, output.id.as_str()).expect("output exists"),
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Paged<T> {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub items: Vec<T>,
}
