use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Collection, Corpus, CorpusIndex, OutputKind, PhaseStatus, Voice};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// Machine-readable issue kinds. The first group are errors, the rest
/// warnings; see [`IssueCode::severity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueCode {
    DuplicateId,
    MultipleProjects,
    DuplicatePhaseName,
    PhaseOrder,
    PhaseDates,
    CompletedWithoutEnd,
    DanglingPhase,
    DanglingEvent,
    DanglingTopic,
    DanglingOutput,
    DanglingSubGeography,
    PhaseMismatch,
    RationaleOnCited,
    InvalidCoordinates,
    InvalidBoundary,
    DuplicateTopicName,
    SelfReference,
    ReciprocityBreach,
    // warnings
    MissingRationale,
    KindLinkConvention,
    CitesLaterPhase,
    DuplicateColorIndex,
}

impl IssueCode {
    pub fn severity(self) -> Severity {
        match self {
            IssueCode::MissingRationale
            | IssueCode::KindLinkConvention
            | IssueCode::CitesLaterPhase
            | IssueCode::DuplicateColorIndex => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            IssueCode::DuplicateId => "duplicate id",
            IssueCode::MultipleProjects => "more than one project",
            IssueCode::DuplicatePhaseName => "duplicate phase name",
            IssueCode::PhaseOrder => "phases not ordered by start date",
            IssueCode::PhaseDates => "phase ends before it starts",
            IssueCode::CompletedWithoutEnd => "completed phase without end date",
            IssueCode::DanglingPhase => "dangling phase reference",
            IssueCode::DanglingEvent => "dangling event reference",
            IssueCode::DanglingTopic => "dangling topic reference",
            IssueCode::DanglingOutput => "dangling output reference",
            IssueCode::DanglingSubGeography => "dangling sub-geography reference",
            IssueCode::PhaseMismatch => "phase mismatch",
            IssueCode::RationaleOnCited => "uncited rationale on cited voice",
            IssueCode::InvalidCoordinates => "coordinates out of range",
            IssueCode::InvalidBoundary => "invalid boundary polygon",
            IssueCode::DuplicateTopicName => "duplicate topic name",
            IssueCode::SelfReference => "self reference",
            IssueCode::ReciprocityBreach => "sparked_by/next_steps reciprocity breach",
            IssueCode::MissingRationale => "uncited voice without rationale",
            IssueCode::KindLinkConvention => "recommendation not sparked by any goal",
            IssueCode::CitesLaterPhase => "output cites voice from a later phase",
            IssueCode::DuplicateColorIndex => "duplicate topic color index",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: IssueCode,
    pub collection: Collection,
    pub id: String,
    pub message: String,
}

impl Issue {
    fn new(code: IssueCode, collection: Collection, id: &str, detail: impl fmt::Display) -> Self {
        Self {
            severity: code.severity(),
            code,
            collection,
            id: id.to_owned(),
            message: format!("{}: {detail}", code.describe()),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}: {}", self.collection, self.id, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_code(&self, code: IssueCode) -> bool {
        self.errors.iter().chain(&self.warnings).any(|i| i.code == code)
    }

    fn push(&mut self, issue: Issue) {
        match issue.severity {
            Severity::Error => self.errors.push(issue),
            Severity::Warning => self.warnings.push(issue),
        }
    }
}

/// Checks every referential and structural invariant of the six collections.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    validate_corpus_with(corpus, Execution::default())
}

pub fn validate_corpus_with(corpus: &Corpus, exec: Execution) -> ValidationReport {
    let mut report = ValidationReport::default();
    let idx = corpus.index();

    check_duplicates(corpus, &mut report);
    check_project(corpus, &mut report);

    for e in &corpus.events {
        if !idx.phases.contains_key(e.phase_id.as_str()) {
            report.push(Issue::new(IssueCode::DanglingPhase, Collection::Events, e.id.as_str(), &e.phase_id));
        }
    }

    for g in &corpus.sub_geographies {
        if let Some(ring) = &g.boundary {
            if ring.len() < 3 {
                report.push(Issue::new(
                    IssueCode::InvalidBoundary,
                    Collection::SubGeographies,
                    g.id.as_str(),
                    format!("{} vertices", ring.len()),
                ));
            } else if let Some(bad) = ring.iter().find(|p| !p.is_valid()) {
                report.push(Issue::new(
                    IssueCode::InvalidBoundary,
                    Collection::SubGeographies,
                    g.id.as_str(),
                    format!("vertex ({}, {}) out of range", bad.lat, bad.lon),
                ));
            }
        }
    }

    let mut topic_names = HashSet::new();
    let mut colors = HashSet::new();
    for t in &corpus.topics {
        if !topic_names.insert(t.name.as_str()) {
            report.push(Issue::new(IssueCode::DuplicateTopicName, Collection::Topics, t.id.as_str(), &t.name));
        }
        if !colors.insert(t.color_index) {
            report.push(Issue::new(
                IssueCode::DuplicateColorIndex,
                Collection::Topics,
                t.id.as_str(),
                t.color_index,
            ));
        }
    }

    let voice_issues = exec.flat_map(&corpus.voices, |v| check_voice(v, &idx));
    for issue in voice_issues {
        report.push(issue);
    }

    for o in &corpus.outputs {
        let oid = o.id.as_str();
        if !idx.phases.contains_key(o.phase_id.as_str()) {
            report.push(Issue::new(IssueCode::DanglingPhase, Collection::Outputs, oid, &o.phase_id));
        }
        for (field, links, mirror_is_next) in [("sparked_by", &o.sparked_by, true), ("next_steps", &o.next_steps, false)] {
            for other in links {
                if other == &o.id {
                    report.push(Issue::new(IssueCode::SelfReference, Collection::Outputs, oid, field));
                    continue;
                }
                let Some(target) = idx.outputs.get(other.as_str()) else {
                    report.push(Issue::new(
                        IssueCode::DanglingOutput,
                        Collection::Outputs,
                        oid,
                        format!("{field} -> {other}"),
                    ));
                    continue;
                };
                let mirror = if mirror_is_next { &target.next_steps } else { &target.sparked_by };
                if !mirror.contains(&o.id) {
                    let mirror_field = if mirror_is_next { "next_steps" } else { "sparked_by" };
                    report.push(Issue::new(
                        IssueCode::ReciprocityBreach,
                        Collection::Outputs,
                        oid,
                        format!("{other} in {field} but {oid} missing from {other}.{mirror_field}"),
                    ));
                }
            }
        }
        if o.kind == OutputKind::Recommendation
            && !o
                .sparked_by
                .iter()
                .any(|s| idx.outputs.get(s.as_str()).is_some_and(|t| t.kind == OutputKind::Goal))
        {
            report.push(Issue::new(IssueCode::KindLinkConvention, Collection::Outputs, oid, &o.title));
        }
    }

    report
}

fn check_duplicates(corpus: &Corpus, report: &mut ValidationReport) {
    fn dups<'a>(ids: impl Iterator<Item = &'a str>, collection: Collection, report: &mut ValidationReport) {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                report.push(Issue::new(IssueCode::DuplicateId, collection, id, id));
            }
        }
    }
    dups(corpus.phases().iter().map(|p| p.id.as_str()), Collection::Project, report);
    dups(corpus.events.iter().map(|e| e.id.as_str()), Collection::Events, report);
    dups(corpus.sub_geographies.iter().map(|g| g.id.as_str()), Collection::SubGeographies, report);
    dups(corpus.topics.iter().map(|t| t.id.as_str()), Collection::Topics, report);
    dups(corpus.voices.iter().map(|v| v.id.as_str()), Collection::Voices, report);
    dups(corpus.outputs.iter().map(|o| o.id.as_str()), Collection::Outputs, report);
}

fn check_project(corpus: &Corpus, report: &mut ValidationReport) {
    let Some(project) = &corpus.project else {
        return;
    };
    let pid = project.id.as_str();
    let mut names = HashSet::new();
    for (i, phase) in project.phases.iter().enumerate() {
        if !names.insert(phase.name.as_str()) {
            report.push(Issue::new(IssueCode::DuplicatePhaseName, Collection::Project, pid, &phase.name));
        }
        if i > 0 && project.phases[i - 1].start_date > phase.start_date {
            report.push(Issue::new(IssueCode::PhaseOrder, Collection::Project, pid, &phase.name));
        }
        match phase.end_date {
            Some(end) if end < phase.start_date => {
                report.push(Issue::new(IssueCode::PhaseDates, Collection::Project, pid, &phase.name));
            }
            None if phase.status == PhaseStatus::Completed => {
                report.push(Issue::new(IssueCode::CompletedWithoutEnd, Collection::Project, pid, &phase.name));
            }
            _ => {}
        }
    }
}

pub(crate) fn multiple_projects_issue(count: usize) -> Issue {
    Issue::new(IssueCode::MultipleProjects, Collection::Project, "*", format!("{count} projects in bundle"))
}

fn check_voice(v: &Voice, idx: &CorpusIndex<'_>) -> Vec<Issue> {
    let mut out = Vec::new();
    let vid = v.id.as_str();
    let issue = |code, detail: &dyn fmt::Display| Issue::new(code, Collection::Voices, vid, detail);

    match idx.events.get(v.event_id.as_str()) {
        None => out.push(issue(IssueCode::DanglingEvent, &v.event_id)),
        Some(e) if e.phase_id != v.phase_id => out.push(issue(
            IssueCode::PhaseMismatch,
            &format_args!("voice phase {} but event {} is in {}", v.phase_id, e.id, e.phase_id),
        )),
        Some(_) => {}
    }
    if !idx.phases.contains_key(v.phase_id.as_str()) {
        out.push(issue(IssueCode::DanglingPhase, &v.phase_id));
    }
    for t in &v.topic_ids {
        if !idx.topics.contains_key(t.as_str()) {
            out.push(issue(IssueCode::DanglingTopic, t));
        }
    }
    let voice_rank = idx.phase_rank(&v.phase_id);
    for o in &v.output_ids {
        match idx.outputs.get(o.as_str()) {
            None => out.push(issue(IssueCode::DanglingOutput, o)),
            Some(output) => {
                if let (Some(vr), Some(or)) = (voice_rank, idx.phase_rank(&output.phase_id)) {
                    if vr > or {
                        out.push(issue(IssueCode::CitesLaterPhase, o));
                    }
                }
            }
        }
    }
    if let Some(g) = &v.sub_geography_id {
        if !idx.sub_geographies.contains_key(g.as_str()) {
            out.push(issue(IssueCode::DanglingSubGeography, g));
        }
    }
    if let Some(c) = v.coordinates {
        if !c.is_valid() {
            out.push(issue(IssueCode::InvalidCoordinates, &format_args!("({}, {})", c.lat, c.lon)));
        }
    }
    match (v.is_cited(), &v.uncited_rationale) {
        (true, Some(_)) => out.push(issue(IssueCode::RationaleOnCited, &"rationale set")),
        (false, None) => out.push(issue(IssueCode::MissingRationale, &"no rationale")),
        _ => {}
    }
    out
}
