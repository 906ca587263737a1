use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{AnalyticsRecord, DeviceType, EventKind, Heartbeat, Page, UsageEvent};

/// Targets for a synthetic usage log. Every kept session starts on the home
/// page and is a sequence of loops that each return home.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsagePlan {
    pub seed: u64,
    pub kept_sessions: usize,
    /// Sessions with far more records than any kept one.
    pub outlier_sessions: usize,
    pub outlier_heartbeats: usize,
    pub total_transitions: usize,
    pub home_to_voices: usize,
    pub voice_card_sessions: usize,
    pub goal_card_sessions: usize,
    pub translate_sessions: usize,
    pub citation_sessions: usize,
    pub mobile_sessions: usize,
    pub tablet_sessions: usize,
    /// Voice ids used as subjects of voice-card and citation events.
    pub voice_ids: Vec<String>,
    pub start: DateTime<Utc>,
}

impl UsagePlan {
    /// The deployment-scale log: 89 sessions of which 5 are outliers.
    pub fn reference() -> Self {
        Self {
            seed: 2025,
            kept_sessions: 84,
            outlier_sessions: 5,
            outlier_heartbeats: 2000,
            total_transitions: 598,
            home_to_voices: 113,
            voice_card_sessions: 59,
            goal_card_sessions: 25,
            translate_sessions: 4,
            citation_sessions: 30,
            mobile_sessions: 12,
            tablet_sessions: 4,
            voice_ids: Vec::new(),
            start: Utc.with_ymd_and_hms(2025, 3, 3, 14, 0, 0).unwrap(),
        }
    }

    fn check(&self) -> Result<(), String> {
        let k = self.kept_sessions;
        if k == 0 {
            return Err("no kept sessions".into());
        }
        if self.home_to_voices < k {
            return Err("every kept session needs a voices loop".into());
        }
        let base = 2 * self.home_to_voices + 2 * k;
        if self.total_transitions < base || self.total_transitions - base == 1 {
            return Err(format!("total transitions must be {base} or at least {}", base + 2));
        }
        for (name, n) in [
            ("voice_card_sessions", self.voice_card_sessions),
            ("goal_card_sessions", self.goal_card_sessions),
            ("translate_sessions", self.translate_sessions),
            ("citation_sessions", self.citation_sessions),
        ] {
            if n > k {
                return Err(format!("{name} exceeds kept sessions"));
            }
        }
        if self.mobile_sessions + self.tablet_sessions > k {
            return Err("device counts exceed kept sessions".into());
        }
        Ok(())
    }
}

/// What the generator put into the log, counted as it was built.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub n_records: usize,
    pub n_sessions: usize,
    pub removed_session_ids: BTreeSet<String>,
    pub kept_session_ids: BTreeSet<String>,
    pub transitions: BTreeMap<String, usize>,
    pub total_transitions: usize,
    pub sessions_with: BTreeMap<String, usize>,
    pub events: BTreeMap<String, usize>,
    pub devices: BTreeMap<String, usize>,
}

impl UsageLedger {
    pub fn transition(&self, from: Page, to: Page) -> usize {
        self.transitions.get(&transition_key(from, to)).copied().unwrap_or(0)
    }

    pub fn sessions_with(&self, kind: EventKind) -> usize {
        self.sessions_with.get(kind.as_str()).copied().unwrap_or(0)
    }

    pub fn share_with(&self, kind: EventKind) -> f64 {
        self.sessions_with(kind) as f64 / self.kept_session_ids.len() as f64
    }
}

pub fn transition_key(from: Page, to: Page) -> String {
    format!("{from}->{to}")
}

struct SessionPlan {
    loops: Vec<Vec<Page>>,
    device: DeviceType,
    voice_cards: bool,
    goal_cards: bool,
    translate: bool,
    citations: bool,
}

struct Writer<'a> {
    records: Vec<AnalyticsRecord>,
    ledger: &'a mut UsageLedger,
}

impl Writer<'_> {
    fn event(&mut self, sid: &str, at: DateTime<Utc>, kind: EventKind, page: Page, subject: Option<String>) {
        *self.ledger.events.entry(kind.as_str().to_owned()).or_insert(0) += 1;
        self.records.push(AnalyticsRecord::Event(UsageEvent {
            session_id: sid.to_owned(),
            timestamp: at,
            kind,
            subject_id: subject,
            page,
            meta: Default::default(),
        }));
    }

    fn heartbeat(&mut self, sid: &str, at: DateTime<Utc>, page: Page, device: DeviceType) {
        self.records.push(AnalyticsRecord::Heartbeat(Heartbeat {
            session_id: sid.to_owned(),
            timestamp: at,
            page,
            device_type: device,
            language: "en-US".to_owned(),
        }));
    }
}

/// Builds a log matching `plan` and the ledger of what it contains.
/// Records come out grouped by session in timestamp order.
pub fn usage_log(plan: &UsagePlan) -> Result<(Vec<AnalyticsRecord>, UsageLedger), String> {
    plan.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let k = plan.kept_sessions;

    let mut sessions: Vec<SessionPlan> = (0..k)
        .map(|_| SessionPlan {
            loops: vec![vec![Page::VoicesList, Page::Home], vec![Page::Outputs, Page::Home]],
            device: DeviceType::Desktop,
            voice_cards: false,
            goal_cards: false,
            translate: false,
            citations: false,
        })
        .collect();

    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    for &i in order.iter().take(plan.home_to_voices - k) {
        sessions[i].loops.push(vec![Page::VoicesList, Page::Home]);
    }
    let mut remaining = plan.total_transitions - 2 * plan.home_to_voices - 2 * k;
    while remaining > 0 {
        let len = match remaining {
            2 | 4 => 2,
            3 => 3,
            _ => rng.gen_range(2..=3),
        };
        let extra = if len == 3 {
            vec![Page::Outputs, Page::Map, Page::Home]
        } else {
            vec![*[Page::About, Page::Map, Page::Feedback].choose(&mut rng).unwrap(), Page::Home]
        };
        sessions[rng.gen_range(0..k)].loops.push(extra);
        remaining -= len;
    }

    let mut flag = |n: usize, set: &mut dyn FnMut(&mut SessionPlan)| {
        let mut idx: Vec<usize> = (0..k).collect();
        idx.shuffle(&mut rng);
        for &i in &idx[..n] {
            set(&mut sessions[i]);
        }
    };
    flag(plan.voice_card_sessions, &mut |s| s.voice_cards = true);
    flag(plan.goal_card_sessions, &mut |s| s.goal_cards = true);
    flag(plan.translate_sessions, &mut |s| s.translate = true);
    flag(plan.citation_sessions, &mut |s| s.citations = true);
    let mut idx: Vec<usize> = (0..k).collect();
    idx.shuffle(&mut rng);
    for &i in &idx[..plan.mobile_sessions] {
        sessions[i].device = DeviceType::Mobile;
    }
    for &i in &idx[plan.mobile_sessions..plan.mobile_sessions + plan.tablet_sessions] {
        sessions[i].device = DeviceType::Tablet;
    }
    for s in &mut sessions {
        s.loops.shuffle(&mut rng);
    }

    let mut ledger = UsageLedger::default();
    let mut w = Writer { records: Vec::new(), ledger: &mut ledger };
    let subject = |rng: &mut ChaCha8Rng| plan.voice_ids.choose(rng).cloned();

    let total = k + plan.outlier_sessions;
    let outlier_slots: BTreeSet<usize> = {
        let mut slots: Vec<usize> = (0..total).collect();
        slots.shuffle(&mut rng);
        slots.into_iter().take(plan.outlier_sessions).collect()
    };
    let mut kept_iter = sessions.into_iter();
    let mut session_start = plan.start;
    for slot in 0..total {
        let sid = format!("{:016x}", rng.gen::<u64>());
        session_start += Duration::minutes(rng.gen_range(20..=180));
        if outlier_slots.contains(&slot) {
            w.ledger.removed_session_ids.insert(sid.clone());
            w.event(&sid, session_start, EventKind::PageView, Page::Home, None);
            for h in 0..plan.outlier_heartbeats {
                w.heartbeat(&sid, session_start + Duration::seconds(5 * h as i64), Page::Home, DeviceType::Desktop);
            }
            continue;
        }
        let s = kept_iter.next().expect("kept session planned");
        w.ledger.kept_session_ids.insert(sid.clone());
        *w.ledger.devices.entry(s.device.as_str().to_owned()).or_insert(0) += 1;

        let mut path = vec![Page::Home];
        for l in &s.loops {
            path.extend(l);
        }
        for pair in path.windows(2) {
            *w.ledger.transitions.entry(transition_key(pair[0], pair[1])).or_insert(0) += 1;
            w.ledger.total_transitions += 1;
        }

        // one-shot events land on the first stay of the matching page
        let first_voices = path.iter().position(|&p| p == Page::VoicesList);
        let first_outputs = path.iter().position(|&p| p == Page::Outputs);
        let mut seen = BTreeSet::new();
        let mut t = session_start;
        for (i, &page) in path.iter().enumerate() {
            let stay = rng.gen_range(5..=60);
            w.event(&sid, t, EventKind::PageView, page, None);
            let mut extra: Vec<(EventKind, Option<String>)> = Vec::new();
            if i == 0 && s.translate {
                extra.push((EventKind::TranslateToggle, None));
            }
            if Some(i) == first_voices && s.voice_cards {
                for _ in 0..rng.gen_range(1..=2) {
                    extra.push((EventKind::VoiceCardView, subject(&mut rng)));
                }
            }
            if Some(i) == first_voices && s.citations {
                extra.push((EventKind::CitationAccordionExpand, subject(&mut rng)));
            }
            if Some(i) == first_outputs && s.goal_cards {
                extra.push((EventKind::GoalCardClick, None));
            }
            for (j, (kind, subj)) in extra.into_iter().enumerate() {
                seen.insert(kind);
                w.event(&sid, t + Duration::seconds(j as i64 + 1), kind, page, subj);
            }
            let mut off = 0;
            while off < stay {
                w.heartbeat(&sid, t + Duration::seconds(off), page, s.device);
                off += 5;
            }
            t += Duration::seconds(stay);
        }
        seen.insert(EventKind::PageView);
        for kind in seen {
            *w.ledger.sessions_with.entry(kind.as_str().to_owned()).or_insert(0) += 1;
        }
    }
    let records = w.records;
    ledger.n_records = records.len();
    ledger.n_sessions = total;
    Ok((records, ledger))
}

/// Records as newline-delimited JSON.
pub fn to_ndjson(records: &[AnalyticsRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
}
