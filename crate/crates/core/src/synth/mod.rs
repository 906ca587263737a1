//! Seeded generators for synthetic corpora and usage logs.
//!
//! Used by the test suites, the benches and `v2v` demos. Every generator is
//! deterministic for a given RNG seed.

mod usage;

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{
    Corpus, Event, Extra, IssueCode, LatLon, Output, OutputId, OutputKind, Phase, PhaseStatus, Project, SubGeography,
    Topic, UncitedRationale, UncitedReason, Voice,
};

pub use usage::{to_ndjson, transition_key, usage_log, UsageLedger, UsagePlan};

const WORDS: &[&str] = &[
    "street", "trees", "safety", "park", "bus", "housing", "lighting", "school", "crosswalk", "library", "rent",
    "noise", "garden", "market", "bike", "lane", "health", "clinic", "jobs", "youth", "seniors", "parking", "flood",
    "sidewalk", "mural", "corner", "store", "transit", "speed", "traffic", "playground", "community", "center",
];

#[derive(Debug, Clone)]
pub struct CorpusShape {
    pub phases: usize,
    pub events: usize,
    pub sub_geographies: usize,
    pub topics: usize,
    pub goals: usize,
    pub recommendations: usize,
    pub insights: usize,
    pub voices: usize,
    /// Probability that a voice cites nothing.
    pub uncited_share: f64,
    /// Probability that an uncited voice has no rationale.
    pub missing_rationale_share: f64,
    pub geotagged_share: f64,
    pub audio_share: f64,
}

impl Default for CorpusShape {
    fn default() -> Self {
        Self {
            phases: 3,
            events: 6,
            sub_geographies: 4,
            topics: 8,
            goals: 4,
            recommendations: 8,
            insights: 4,
            voices: 100,
            uncited_share: 0.15,
            missing_rationale_share: 0.1,
            geotagged_share: 0.6,
            audio_share: 0.14,
        }
    }
}

fn text(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(3..=10);
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

fn pick_some<T: Clone + Ord>(rng: &mut impl Rng, pool: &[T], max: usize) -> BTreeSet<T> {
    if pool.is_empty() {
        return BTreeSet::new();
    }
    let n = rng.gen_range(1..=max.min(pool.len()));
    pool.choose_multiple(rng, n).cloned().collect()
}

/// A random corpus that passes validation with zero errors.
pub fn random_corpus(rng: &mut impl Rng, shape: &CorpusShape) -> Corpus {
    let phases_n = shape.phases.max(1);
    let base = NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date");
    let phases: Vec<Phase> = (0..phases_n)
        .map(|i| {
            let start = base + Duration::days(60 * i as i64);
            let last = i + 1 == phases_n;
            Phase {
                id: format!("ph{i}").into(),
                name: format!("Phase {}", i + 1),
                start_date: start,
                end_date: (!last).then(|| start + Duration::days(59)),
                status: if last { PhaseStatus::Active } else { PhaseStatus::Completed },
                description: text(rng),
                extra: Extra::new(),
            }
        })
        .collect();

    let events: Vec<Event> = (0..shape.events.max(1))
        .map(|i| {
            let phase = &phases[rng.gen_range(0..phases.len())];
            Event {
                id: format!("ev{i}").into(),
                name: format!("Event {i}"),
                kind: ["survey", "workshop", "tabling", "interview"][i % 4].to_owned(),
                phase_id: phase.id.clone(),
                description: text(rng),
                date: Some(phase.start_date + Duration::days(rng.gen_range(0..59))),
                extra: Extra::new(),
            }
        })
        .collect();

    let sub_geographies: Vec<SubGeography> = (0..shape.sub_geographies)
        .map(|i| {
            let lat = 40.6 + 0.05 * i as f64;
            let lon = -74.0;
            SubGeography {
                id: format!("sg{i}").into(),
                name: format!("Area {i}"),
                description: text(rng),
                boundary: Some(vec![
                    LatLon::new(lat, lon),
                    LatLon::new(lat, lon + 0.2),
                    LatLon::new(lat + 0.05, lon + 0.2),
                    LatLon::new(lat + 0.05, lon),
                ]),
                extra: Extra::new(),
            }
        })
        .collect();

    let topics: Vec<Topic> = (0..shape.topics)
        .map(|i| Topic {
            id: format!("tp{i}").into(),
            name: format!("Topic {i}"),
            description: text(rng),
            color_index: i as u32,
            extra: Extra::new(),
        })
        .collect();

    let mut outputs = Vec::new();
    let mut push_output = |prefix: &str, kind: OutputKind, n: usize, rng: &mut dyn rand::RngCore| {
        for i in 0..n {
            outputs.push(Output {
                id: format!("{prefix}{i}").into(),
                kind,
                title: format!("{} {i} {}", kind.as_str(), WORDS[rng.gen_range(0..WORDS.len())]),
                description: String::new(),
                voice_summary: String::new(),
                sparked_by: BTreeSet::new(),
                next_steps: BTreeSet::new(),
                phase_id: phases[rng.gen_range(0..phases.len())].id.clone(),
                revision: 1,
                extra: Extra::new(),
            });
        }
    };
    push_output("in", OutputKind::Insight, shape.insights, rng);
    push_output("go", OutputKind::Goal, shape.goals, rng);
    push_output("re", OutputKind::Recommendation, shape.recommendations, rng);
    for o in outputs.iter_mut() {
        o.description = text(rng);
        o.voice_summary = text(rng);
    }

    let goal_ids: Vec<OutputId> = outputs.iter().filter(|o| o.kind == OutputKind::Goal).map(|o| o.id.clone()).collect();
    let insight_ids: Vec<OutputId> =
        outputs.iter().filter(|o| o.kind == OutputKind::Insight).map(|o| o.id.clone()).collect();
    let mut edges: Vec<(OutputId, OutputId)> = Vec::new();
    for o in &outputs {
        match o.kind {
            OutputKind::Recommendation => {
                for g in pick_some(rng, &goal_ids, 2) {
                    edges.push((g, o.id.clone()));
                }
            }
            OutputKind::Goal if rng.gen_bool(0.5) => {
                for i in pick_some(rng, &insight_ids, 1) {
                    edges.push((i, o.id.clone()));
                }
            }
            _ => {}
        }
    }
    for (from, to) in edges {
        // `from` sparked `to`
        for o in outputs.iter_mut() {
            if o.id == to {
                o.sparked_by.insert(from.clone());
            } else if o.id == from {
                o.next_steps.insert(to.clone());
            }
        }
    }

    let rank = |id: &crate::model::PhaseId| phases.iter().position(|p| &p.id == id).expect("known phase");
    // outputs citable from each phase: those in the same or a later phase
    let citable: Vec<Vec<OutputId>> = (0..phases.len())
        .map(|r| outputs.iter().filter(|o| rank(&o.phase_id) >= r).map(|o| o.id.clone()).collect())
        .collect();
    let topic_ids: Vec<_> = topics.iter().map(|t| t.id.clone()).collect();
    let reasons = [
        UncitedReason::InsufficientContext,
        UncitedReason::OutsideProjectScope,
        UncitedReason::DuplicateOfCited,
        UncitedReason::AddressedElsewhere,
        UncitedReason::Other,
    ];
    let voices: Vec<Voice> = (0..shape.voices)
        .map(|i| {
            let event = &events[rng.gen_range(0..events.len())];
            let phase = phases.iter().find(|p| p.id == event.phase_id).expect("event phase exists");
            let n_topics = rng.gen_range(0..=3.min(topic_ids.len()));
            let topic_set = topic_ids.choose_multiple(rng, n_topics).cloned().collect();
            let pool = &citable[rank(&phase.id)];
            let cited = !pool.is_empty() && !rng.gen_bool(shape.uncited_share.clamp(0.0, 1.0));
            let output_set = if cited { pick_some(rng, pool, 3) } else { BTreeSet::new() };
            let rationale = (!cited && !rng.gen_bool(shape.missing_rationale_share.clamp(0.0, 1.0))).then(|| {
                UncitedRationale {
                    reason: *reasons.choose(rng).expect("non-empty"),
                    note: rng.gen_bool(0.3).then(|| text(rng)),
                }
            });
            let coordinates = rng
                .gen_bool(shape.geotagged_share.clamp(0.0, 1.0))
                .then(|| LatLon::new(40.6 + rng.gen::<f64>() * 0.2, -74.0 + rng.gen::<f64>() * 0.2));
            let sub_geography_id = if sub_geographies.is_empty() || !rng.gen_bool(0.5) {
                None
            } else {
                Some(sub_geographies[rng.gen_range(0..sub_geographies.len())].id.clone())
            };
            let start = Utc.from_utc_datetime(&phase.start_date.and_hms_opt(9, 0, 0).expect("valid time"));
            Voice {
                id: format!("v{i:05}").into(),
                text: text(rng),
                event_id: event.id.clone(),
                phase_id: event.phase_id.clone(),
                topic_ids: topic_set,
                output_ids: output_set,
                sub_geography_id,
                location_text: rng.gen_bool(0.2).then(|| format!("{} and {}", WORDS[i % WORDS.len()], WORDS[(i * 7) % WORDS.len()])),
                coordinates,
                audio_ref: rng.gen_bool(shape.audio_share.clamp(0.0, 1.0)).then(|| format!("media/v{i:05}.mp3")),
                uncited_rationale: rationale,
                collected_at: start + Duration::minutes(rng.gen_range(0..60 * 24 * 58)),
                extra: Extra::new(),
            }
        })
        .collect();

    Corpus {
        project: Some(Project {
            id: "prj".into(),
            name: "Neighborhood Plan".into(),
            description: text(rng),
            goals_overview: text(rng),
            phases,
            extra: Extra::new(),
        }),
        events,
        sub_geographies,
        topics,
        voices,
        outputs,
    }
}

/// Small deterministic corpus: 3 phases, 24 voices, every defect injectable.
pub fn small_fixture() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    random_corpus(
        &mut rng,
        &CorpusShape {
            voices: 24,
            missing_rationale_share: 0.0,
            uncited_share: 0.2,
            ..CorpusShape::default()
        },
    )
}

/// Seeded referential and structural defects used to exercise validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defect {
    DanglingVoiceEvent,
    DanglingVoiceTopic,
    DanglingVoiceOutput,
    DanglingVoiceSubGeography,
    DanglingEventPhase,
    DanglingOutputPhase,
    DanglingSparkedBy,
    DanglingNextSteps,
    VoicePhaseMismatch,
    SelfSparkedBy,
    SelfNextSteps,
    ReciprocityBreach,
}

impl Defect {
    pub const ALL: [Defect; 12] = [
        Defect::DanglingVoiceEvent,
        Defect::DanglingVoiceTopic,
        Defect::DanglingVoiceOutput,
        Defect::DanglingVoiceSubGeography,
        Defect::DanglingEventPhase,
        Defect::DanglingOutputPhase,
        Defect::DanglingSparkedBy,
        Defect::DanglingNextSteps,
        Defect::VoicePhaseMismatch,
        Defect::SelfSparkedBy,
        Defect::SelfNextSteps,
        Defect::ReciprocityBreach,
    ];

    pub fn expected_code(self) -> IssueCode {
        match self {
            Defect::DanglingVoiceEvent => IssueCode::DanglingEvent,
            Defect::DanglingVoiceTopic => IssueCode::DanglingTopic,
            Defect::DanglingVoiceOutput | Defect::DanglingSparkedBy | Defect::DanglingNextSteps => {
                IssueCode::DanglingOutput
            }
            Defect::DanglingVoiceSubGeography => IssueCode::DanglingSubGeography,
            Defect::DanglingEventPhase | Defect::DanglingOutputPhase => IssueCode::DanglingPhase,
            Defect::VoicePhaseMismatch => IssueCode::PhaseMismatch,
            Defect::SelfSparkedBy | Defect::SelfNextSteps => IssueCode::SelfReference,
            Defect::ReciprocityBreach => IssueCode::ReciprocityBreach,
        }
    }

    /// Mutates the corpus to contain this defect. Returns `false` when the
    /// corpus lacks the records needed (e.g. no voices).
    pub fn inject(self, c: &mut Corpus) -> bool {
        const GHOST: &str = "__missing__";
        match self {
            Defect::DanglingVoiceEvent => c.voices.first_mut().map(|v| v.event_id = GHOST.into()).is_some(),
            Defect::DanglingVoiceTopic => c.voices.first_mut().map(|v| v.topic_ids.insert(GHOST.into())).is_some(),
            Defect::DanglingVoiceOutput => c
                .voices
                .first_mut()
                .map(|v| {
                    v.output_ids.insert(GHOST.into());
                    v.uncited_rationale = None;
                })
                .is_some(),
            Defect::DanglingVoiceSubGeography => {
                c.voices.first_mut().map(|v| v.sub_geography_id = Some(GHOST.into())).is_some()
            }
            Defect::DanglingEventPhase => c.events.first_mut().map(|e| e.phase_id = GHOST.into()).is_some(),
            Defect::DanglingOutputPhase => c.outputs.first_mut().map(|o| o.phase_id = GHOST.into()).is_some(),
            Defect::DanglingSparkedBy => c.outputs.first_mut().map(|o| o.sparked_by.insert(GHOST.into())).is_some(),
            Defect::DanglingNextSteps => c.outputs.first_mut().map(|o| o.next_steps.insert(GHOST.into())).is_some(),
            Defect::VoicePhaseMismatch => {
                let phases: Vec<_> = c.phases().iter().map(|p| p.id.clone()).collect();
                let Some(v) = c.voices.first_mut() else { return false };
                match phases.into_iter().find(|p| *p != v.phase_id) {
                    Some(other) => {
                        v.phase_id = other;
                        true
                    }
                    None => false,
                }
            }
            Defect::SelfSparkedBy => c
                .outputs
                .first_mut()
                .map(|o| {
                    let id = o.id.clone();
                    o.sparked_by.insert(id);
                })
                .is_some(),
            Defect::SelfNextSteps => c
                .outputs
                .first_mut()
                .map(|o| {
                    let id = o.id.clone();
                    o.next_steps.insert(id);
                })
                .is_some(),
            Defect::ReciprocityBreach => {
                let Some((child, parent)) = c
                    .outputs
                    .iter()
                    .find_map(|o| o.sparked_by.iter().next().map(|p| (o.id.clone(), p.clone())))
                else {
                    return false;
                };
                c.output_mut(parent.as_str()).map(|p| p.next_steps.remove(&child)).unwrap_or(false)
            }
        }
    }
}
