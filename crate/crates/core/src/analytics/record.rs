use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::Extra;

/// Community-facing pages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Page {
    Home,
    About,
    VoicesList,
    Map,
    Outputs,
    Feedback,
}

impl Page {
    pub const ALL: [Page; 6] = [Page::Home, Page::About, Page::VoicesList, Page::Map, Page::Outputs, Page::Feedback];

    pub fn as_str(self) -> &'static str {
        match self {
            Page::Home => "home",
            Page::About => "about",
            Page::VoicesList => "voices_list",
            Page::Map => "map",
            Page::Outputs => "outputs",
            Page::Feedback => "feedback",
        }
    }
}

impl fmt::Display for Page {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PageView,
    VoiceCardView,
    CitationAccordionExpand,
    OutputCardView,
    OutputDeepDive,
    OutputFilter,
    GoalCardClick,
    OutputToOutputClick,
    VoiceOutputClick,
    MapPointClick,
    TranslateToggle,
    AudioPlay,
    Search,
    FilterApply,
}

impl EventKind {
    pub const ALL: [EventKind; 14] = [
        EventKind::PageView,
        EventKind::VoiceCardView,
        EventKind::CitationAccordionExpand,
        EventKind::OutputCardView,
        EventKind::OutputDeepDive,
        EventKind::OutputFilter,
        EventKind::GoalCardClick,
        EventKind::OutputToOutputClick,
        EventKind::VoiceOutputClick,
        EventKind::MapPointClick,
        EventKind::TranslateToggle,
        EventKind::AudioPlay,
        EventKind::Search,
        EventKind::FilterApply,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PageView => "page_view",
            EventKind::VoiceCardView => "voice_card_view",
            EventKind::CitationAccordionExpand => "citation_accordion_expand",
            EventKind::OutputCardView => "output_card_view",
            EventKind::OutputDeepDive => "output_deep_dive",
            EventKind::OutputFilter => "output_filter",
            EventKind::GoalCardClick => "goal_card_click",
            EventKind::OutputToOutputClick => "output_to_output_click",
            EventKind::VoiceOutputClick => "voice_output_click",
            EventKind::MapPointClick => "map_point_click",
            EventKind::TranslateToggle => "translate_toggle",
            EventKind::AudioPlay => "audio_play",
            EventKind::Search => "search",
            EventKind::FilterApply => "filter_apply",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceType {
    Desktop,
    Mobile,
    Tablet,
}

impl DeviceType {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceType::Desktop => "desktop",
            DeviceType::Mobile => "mobile",
            DeviceType::Tablet => "tablet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageEvent {
    pub session_id: String,
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
    pub page: Page,
    #[serde(default, skip_serializing_if = "Extra::is_empty")]
    pub meta: Extra,
}

/// Periodic presence ping, nominally every five seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heartbeat {
    pub session_id: String,
    pub timestamp: DateTime<Utc>,
    pub page: Page,
    pub device_type: DeviceType,
    /// BCP-47 language tag.
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalyticsRecord {
    Event(UsageEvent),
    Heartbeat(Heartbeat),
}

impl AnalyticsRecord {
    pub fn session_id(&self) -> &str {
        match self {
            AnalyticsRecord::Event(e) => &e.session_id,
            AnalyticsRecord::Heartbeat(h) => &h.session_id,
        }
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        match self {
            AnalyticsRecord::Event(e) => e.timestamp,
            AnalyticsRecord::Heartbeat(h) => h.timestamp,
        }
    }

    pub fn page(&self) -> Page {
        match self {
            AnalyticsRecord::Event(e) => e.page,
            AnalyticsRecord::Heartbeat(h) => h.page,
        }
    }

    /// Key under which replays of the same record are recognised.
    pub fn dedup_key(&self) -> (String, DateTime<Utc>, &'static str, Page) {
        let kind = match self {
            AnalyticsRecord::Event(e) => e.kind.as_str(),
            AnalyticsRecord::Heartbeat(_) => "heartbeat",
        };
        (self.session_id().to_owned(), self.timestamp(), kind, self.page())
    }
}

/// A record as stored, with its server receive sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub record: AnalyticsRecord,
}
