//! Faceted voice filtering, keyword search, pagination and per-output topic
//! distributions.
//!
//! Facet semantics: a voice matches a facet when it carries *any* of the
//! facet's ids; it matches the filter when it matches *every* non-empty
//! facet. An empty filter selects everything.

use std::collections::{BTreeSet, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::model::{Corpus, EventId, Output, OutputId, OutputKind, SubGeographyId, TopicId, Voice};

pub const DEFAULT_PAGE_LIMIT: usize = 25;
pub const MAX_PAGE_LIMIT: usize = 200;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("invalid page: {0}")]
    InvalidPage(String),
    #[error("unknown output `{0}`")]
    UnknownOutput(String),
    #[error("output `{0}` is not a goal")]
    NotAGoal(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoiceFilter {
    #[serde(default)]
    pub event_ids: BTreeSet<EventId>,
    #[serde(default)]
    pub sub_geography_ids: BTreeSet<SubGeographyId>,
    #[serde(default)]
    pub topic_ids: BTreeSet<TopicId>,
    #[serde(default)]
    pub output_ids: BTreeSet<OutputId>,
    #[serde(default)]
    pub cited: Option<bool>,
    #[serde(default)]
    pub query_text: Option<String>,
}

impl VoiceFilter {
    pub fn is_empty(&self) -> bool {
        *self == VoiceFilter::default()
    }

    pub fn matches(&self, v: &Voice) -> bool {
        let needle = self.query_text.as_deref().map(str::to_lowercase);
        self.matches_with_needle(v, needle.as_deref())
    }

    fn matches_with_needle(&self, v: &Voice, needle: Option<&str>) -> bool {
        (self.event_ids.is_empty() || self.event_ids.contains(&v.event_id))
            && (self.sub_geography_ids.is_empty()
                || v.sub_geography_id.as_ref().is_some_and(|g| self.sub_geography_ids.contains(g)))
            && (self.topic_ids.is_empty() || v.topic_ids.iter().any(|t| self.topic_ids.contains(t)))
            && (self.output_ids.is_empty() || v.output_ids.iter().any(|o| self.output_ids.contains(o)))
            && self.cited.is_none_or(|c| v.is_cited() == c)
            && needle.is_none_or(|n| keyword_match(v, n))
    }
}

/// Case-insensitive substring test against voice text and location text.
/// `needle` must already be lowercase.
fn keyword_match(v: &Voice, needle: &str) -> bool {
    needle.is_empty()
        || v.text.to_lowercase().contains(needle)
        || v.location_text.as_deref().is_some_and(|l| l.to_lowercase().contains(needle))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    /// Phase start date, then collection time, then id.
    #[default]
    PhaseChronological,
    /// Collection time, then id.
    CollectedAt,
}

impl std::str::FromStr for SortOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phase_chronological" | "phase" => Ok(SortOrder::PhaseChronological),
            "collected_at" => Ok(SortOrder::CollectedAt),
            other => Err(format!("unknown sort `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub offset: usize,
    pub limit: usize,
}

impl Default for Page {
    fn default() -> Self {
        Self { offset: 0, limit: DEFAULT_PAGE_LIMIT }
    }
}

impl Page {
    pub fn new(offset: usize, limit: usize) -> Result<Self, QueryError> {
        if limit == 0 || limit > MAX_PAGE_LIMIT {
            return Err(QueryError::InvalidPage(format!("limit {limit} outside 1..={MAX_PAGE_LIMIT}")));
        }
        Ok(Self { offset, limit })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoicePage<'a> {
    pub voices: Vec<&'a Voice>,
    /// Number of matches before paging.
    pub total: usize,
}

pub fn filter_voices<'a>(
    corpus: &'a Corpus,
    filter: &VoiceFilter,
    sort: SortOrder,
    page: Page,
) -> Result<VoicePage<'a>, QueryError> {
    filter_voices_with(corpus, filter, sort, page, Execution::default())
}

pub fn filter_voices_with<'a>(
    corpus: &'a Corpus,
    filter: &VoiceFilter,
    sort: SortOrder,
    page: Page,
    exec: Execution,
) -> Result<VoicePage<'a>, QueryError> {
    let page = Page::new(page.offset, page.limit)?;
    let mut hits = select_voices(corpus, filter, exec);
    sort_voices(corpus, &mut hits, sort, exec);
    let total = hits.len();
    let voices = hits.into_iter().skip(page.offset).take(page.limit).collect();
    Ok(VoicePage { voices, total })
}

/// Every matching voice, in corpus order.
pub fn select_voices<'a>(corpus: &'a Corpus, filter: &VoiceFilter, exec: Execution) -> Vec<&'a Voice> {
    let needle = filter.query_text.as_deref().map(str::to_lowercase);
    exec.filter_map(&corpus.voices, |v| filter.matches_with_needle(v, needle.as_deref()).then_some(v))
}

pub fn sort_voices(corpus: &Corpus, voices: &mut [&Voice], sort: SortOrder, exec: Execution) {
    match sort {
        SortOrder::PhaseChronological => {
            let starts: HashMap<&str, NaiveDate> =
                corpus.phases().iter().map(|p| (p.id.as_str(), p.start_date)).collect();
            let start = |v: &Voice| starts.get(v.phase_id.as_str()).copied().unwrap_or(NaiveDate::MAX);
            exec.sort_by(voices, |a, b| {
                start(a)
                    .cmp(&start(b))
                    .then_with(|| a.collected_at.cmp(&b.collected_at))
                    .then_with(|| a.id.cmp(&b.id))
            });
        }
        SortOrder::CollectedAt => {
            exec.sort_by(voices, |a, b| a.collected_at.cmp(&b.collected_at).then_with(|| a.id.cmp(&b.id)));
        }
    }
}

/// Keyword search over voice text and location text.
pub fn search_voices<'a>(corpus: &'a Corpus, query_text: &str) -> Vec<&'a Voice> {
    let filter = VoiceFilter { query_text: Some(query_text.to_owned()), ..VoiceFilter::default() };
    select_voices(corpus, &filter, Execution::default())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicCount {
    pub topic_id: TopicId,
    pub topic_name: String,
    pub color_index: u32,
    pub pair_count: usize,
}

/// Voice-topic pair counts among the voices citing one output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub output_id: OutputId,
    pub entries: Vec<TopicCount>,
    /// Cited voices that carry no topic.
    pub untagged_count: usize,
    pub total_cited_voices: usize,
}

pub fn topic_distribution(corpus: &Corpus, output_id: &str) -> Result<TopicDistribution, QueryError> {
    let output = corpus.output(output_id).ok_or_else(|| QueryError::UnknownOutput(output_id.to_owned()))?;
    let mut counts: HashMap<&TopicId, usize> = HashMap::new();
    let mut untagged = 0;
    let mut total = 0;
    for v in corpus.voices.iter().filter(|v| v.output_ids.contains(&output.id)) {
        total += 1;
        if v.topic_ids.is_empty() {
            untagged += 1;
        }
        for t in &v.topic_ids {
            *counts.entry(t).or_default() += 1;
        }
    }
    let idx = corpus.index();
    let mut entries: Vec<TopicCount> = counts
        .into_iter()
        .filter_map(|(t, n)| {
            idx.topics.get(t.as_str()).map(|topic| TopicCount {
                topic_id: t.clone(),
                topic_name: topic.name.clone(),
                color_index: topic.color_index,
                pair_count: n,
            })
        })
        .collect();
    entries.sort_by(|a, b| {
        b.pair_count
            .cmp(&a.pair_count)
            .then_with(|| a.topic_name.cmp(&b.topic_name))
            .then_with(|| a.topic_id.cmp(&b.topic_id))
    });
    Ok(TopicDistribution {
        output_id: output.id.clone(),
        entries,
        untagged_count: untagged,
        total_cited_voices: total,
    })
}

/// Recommendations sparked by a goal, sorted by title.
pub fn strategies_for_goal<'a>(corpus: &'a Corpus, goal_id: &str) -> Result<Vec<&'a Output>, QueryError> {
    let goal = corpus.output(goal_id).ok_or_else(|| QueryError::UnknownOutput(goal_id.to_owned()))?;
    if goal.kind != OutputKind::Goal {
        return Err(QueryError::NotAGoal(goal_id.to_owned()));
    }
    let mut out: Vec<&Output> = corpus
        .outputs
        .iter()
        .filter(|o| o.kind == OutputKind::Recommendation && o.sparked_by.contains(&goal.id))
        .collect();
    out.sort_by(|a, b| a.title.cmp(&b.title).then_with(|| a.id.cmp(&b.id)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Extra;
    use crate::synth::{random_corpus, small_fixture, CorpusShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_page() -> Page {
        Page::new(0, MAX_PAGE_LIMIT).unwrap()
    }

    #[test]
    fn empty_filter_selects_everything() {
        let c = small_fixture();
        let p = filter_voices(&c, &VoiceFilter::default(), SortOrder::PhaseChronological, all_page()).unwrap();
        assert_eq!(p.total, c.voices.len());
    }

    #[test]
    fn unknown_facet_id_matches_nothing() {
        let c = small_fixture();
        let f = VoiceFilter { topic_ids: ["ghost".into()].into(), ..VoiceFilter::default() };
        let p = filter_voices(&c, &f, SortOrder::CollectedAt, Page::default()).unwrap();
        assert_eq!(p.total, 0);
        assert!(p.voices.is_empty());
    }

    #[test]
    fn topic_and_event_equals_set_intersection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_corpus(&mut rng, &CorpusShape { voices: 300, ..CorpusShape::default() });
        let t = c.topics[1].id.clone();
        let e = c.events[2].id.clone();
        let f = VoiceFilter { topic_ids: [t.clone()].into(), event_ids: [e.clone()].into(), ..VoiceFilter::default() };
        let got: BTreeSet<_> = select_voices(&c, &f, Execution::Parallel).iter().map(|v| v.id.clone()).collect();
        let mut expected = BTreeSet::new();
        for v in &c.voices {
            let mut has_t = false;
            for x in &v.topic_ids {
                if *x == t {
                    has_t = true;
                }
            }
            if has_t && v.event_id == e {
                expected.insert(v.id.clone());
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn cited_false_returns_the_uncited() {
        let mut c = small_fixture();
        for v in c.voices.iter_mut() {
            if v.output_ids.is_empty() {
                v.output_ids.insert(c.outputs[0].id.clone());
                v.uncited_rationale = None;
            }
        }
        for v in c.voices.iter_mut().skip(4).take(3) {
            v.output_ids.clear();
        }
        let f = VoiceFilter { cited: Some(false), ..VoiceFilter::default() };
        let p = filter_voices(&c, &f, SortOrder::CollectedAt, all_page()).unwrap();
        let ids: BTreeSet<_> = p.voices.iter().map(|v| v.id.clone()).collect();
        let expected: BTreeSet<_> = c.voices[4..7].iter().map(|v| v.id.clone()).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn search_is_case_insensitive_substring() {
        let mut c = small_fixture();
        c.voices[0].text = "We need more Street Trees here".into();
        c.voices[1].location_text = Some("TREEHOUSE corner".into());
        let hits: BTreeSet<_> = search_voices(&c, "tree").iter().map(|v| v.id.clone()).collect();
        assert!(hits.contains(&c.voices[0].id));
        assert!(hits.contains(&c.voices[1].id));
        assert_eq!(search_voices(&c, "").len(), c.voices.len());
    }

    #[test]
    fn bad_pages_are_rejected() {
        assert!(Page::new(0, 0).is_err());
        assert!(Page::new(0, MAX_PAGE_LIMIT + 1).is_err());
        let c = small_fixture();
        let p = filter_voices(&c, &VoiceFilter::default(), SortOrder::CollectedAt, Page::new(10_000, 5).unwrap()).unwrap();
        assert!(p.voices.is_empty());
        assert_eq!(p.total, c.voices.len());
    }

    #[test]
    fn phase_order_precedes_collection_time() {
        let c = small_fixture();
        let p = filter_voices(&c, &VoiceFilter::default(), SortOrder::PhaseChronological, all_page()).unwrap();
        let idx = c.index();
        let ranks: Vec<usize> = p.voices.iter().map(|v| idx.phase_rank(&v.phase_id).unwrap()).collect();
        assert!(ranks.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zero_citation_output_has_empty_distribution() {
        let mut c = small_fixture();
        let id = c.outputs[0].id.clone();
        for v in c.voices.iter_mut() {
            v.output_ids.remove(&id);
        }
        let d = topic_distribution(&c, id.as_str()).unwrap();
        assert!(d.entries.is_empty());
        assert_eq!((d.untagged_count, d.total_cited_voices), (0, 0));
        assert_eq!(topic_distribution(&c, "nope"), Err(QueryError::UnknownOutput("nope".into())));
    }

    #[test]
    fn dominant_topic_leads_the_distribution() {
        // A quality-of-life goal whose cited comments mostly concern public
        // safety and health; counts are fixture-defined.
        let mut c = small_fixture();
        c.topics.push(crate::model::Topic {
            id: "psh".into(),
            name: "Public safety and health".into(),
            description: String::new(),
            color_index: 50,
            extra: Extra::new(),
        });
        let goal = c.outputs.iter().find(|o| o.kind == OutputKind::Goal).unwrap().id.clone();
        for v in c.voices.iter_mut() {
            v.output_ids.remove(&goal);
        }
        for (i, v) in c.voices.iter_mut().take(10).enumerate() {
            v.output_ids.insert(goal.clone());
            v.uncited_rationale = None;
            v.topic_ids.clear();
            if i < 7 {
                v.topic_ids.insert("psh".into());
            }
            if i % 3 == 0 {
                v.topic_ids.insert(c.topics[0].id.clone());
            }
        }
        let d = topic_distribution(&c, goal.as_str()).unwrap();
        assert_eq!(d.entries[0].topic_name, "Public safety and health");
        assert_eq!(d.entries[0].pair_count, 7);
        assert_eq!(d.total_cited_voices, 10);
        assert_eq!(d.untagged_count, 2); // i = 7, 8 (9 carries topics[0])
    }

    #[test]
    fn strategies_follow_sparked_by() {
        let c = small_fixture();
        let goals: Vec<_> = c.outputs.iter().filter(|o| o.kind == OutputKind::Goal).collect();
        for g in goals {
            let got: Vec<_> = strategies_for_goal(&c, g.id.as_str()).unwrap().iter().map(|o| o.id.clone()).collect();
            let mut brute: Vec<&Output> = c
                .outputs
                .iter()
                .filter(|o| o.kind == OutputKind::Recommendation && o.sparked_by.iter().any(|s| *s == g.id))
                .collect();
            brute.sort_by(|a, b| (&a.title, &a.id).cmp(&(&b.title, &b.id)));
            assert_eq!(got, brute.iter().map(|o| o.id.clone()).collect::<Vec<_>>());
        }
        let rec = c.outputs.iter().find(|o| o.kind == OutputKind::Recommendation).unwrap();
        assert_eq!(strategies_for_goal(&c, rec.id.as_str()), Err(QueryError::NotAGoal(rec.id.0.clone())));
    }

    #[test]
    fn goal_without_strategies_is_empty() {
        let mut c = small_fixture();
        let gid = c.outputs.iter().find(|o| o.kind == OutputKind::Goal).unwrap().id.clone();
        for o in c.outputs.iter_mut() {
            o.sparked_by.remove(&gid);
        }
        assert!(strategies_for_goal(&c, gid.as_str()).unwrap().is_empty());
    }
}
