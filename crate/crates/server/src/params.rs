//! Query-string parsing. Id facets accept repeated keys and comma lists
//! (`topic_id=a&topic_id=b` or `topic_id=a,b`). Unknown keys are rejected.

use std::collections::BTreeSet;
use std::str::FromStr;

use chrono::NaiveDate;
use v2v_core::geo::{BoundingBox, LayoutScheme};
use v2v_core::model::OutputKind;
use v2v_core::query::{Page, SortOrder, VoiceFilter, DEFAULT_PAGE_LIMIT};

use crate::error::ApiError;

pub struct Params(Vec<(String, String)>);

impl Params {
    pub fn parse(raw: Option<&str>, allowed: &[&str]) -> Result<Self, ApiError> {
        let pairs: Vec<(String, String)> = form_urlencoded::parse(raw.unwrap_or("").as_bytes()).into_owned().collect();
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(ApiError::bad_request(format!("unknown query parameter `{k}`")));
        }
        Ok(Self(pairs))
    }

    pub fn single(&self, key: &str) -> Result<Option<&str>, ApiError> {
        let mut values = self.0.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let first = values.next();
        if values.next().is_some() {
            return Err(ApiError::bad_request(format!("`{key}` given more than once")));
        }
        Ok(first)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ApiError>
    where
        T::Err: std::fmt::Display,
    {
        self.single(key)?
            .map(|v| v.parse::<T>().map_err(|e| ApiError::bad_request(format!("invalid `{key}`: {e}"))))
            .transpose()
    }

    pub fn ids<T: From<String> + Ord>(&self, key: &str) -> BTreeSet<T> {
        self.0
            .iter()
            .filter(|(k, _)| k == key)
            .flat_map(|(_, v)| v.split(','))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| T::from(s.to_owned()))
            .collect()
    }
}

pub const FACET_KEYS: [&str; 6] = ["event_id", "sub_geography_id", "topic_id", "output_id", "cited", "search"];

pub fn voice_filter(p: &Params) -> Result<VoiceFilter, ApiError> {
    Ok(VoiceFilter {
        event_ids: p.ids("event_id"),
        sub_geography_ids: p.ids("sub_geography_id"),
        topic_ids: p.ids("topic_id"),
        output_ids: p.ids("output_id"),
        cited: p.parsed::<bool>("cited")?,
        query_text: p.single("search")?.map(str::to_owned),
    })
}

pub struct VoiceListQuery {
    pub filter: VoiceFilter,
    pub sort: SortOrder,
    pub page: Page,
}

pub fn voice_list(raw: Option<&str>) -> Result<VoiceListQuery, ApiError> {
    let mut allowed = FACET_KEYS.to_vec();
    allowed.extend(["sort", "offset", "limit"]);
    let p = Params::parse(raw, &allowed)?;
    let page = Page::new(
        p.parsed("offset")?.unwrap_or(0),
        p.parsed("limit")?.unwrap_or(DEFAULT_PAGE_LIMIT),
    )?;
    Ok(VoiceListQuery {
        filter: voice_filter(&p)?,
        sort: p.parsed("sort")?.unwrap_or_default(),
        page,
    })
}

pub struct OutputListQuery {
    pub kind: Option<OutputKind>,
    pub goal_id: Option<String>,
}

pub fn output_list(raw: Option<&str>) -> Result<OutputListQuery, ApiError> {
    let p = Params::parse(raw, &["kind", "goal_id"])?;
    Ok(OutputListQuery { kind: p.parsed("kind")?, goal_id: p.single("goal_id")?.map(str::to_owned) })
}

pub struct ClusterQuery {
    pub zoom: i64,
    pub bbox: Option<BoundingBox>,
    pub filter: VoiceFilter,
}

pub fn clusters(raw: Option<&str>) -> Result<ClusterQuery, ApiError> {
    let mut allowed = FACET_KEYS.to_vec();
    allowed.extend(["zoom", "bbox"]);
    let p = Params::parse(raw, &allowed)?;
    let zoom = p.parsed::<i64>("zoom")?.ok_or_else(|| ApiError::bad_request("`zoom` is required"))?;
    let bbox = p.single("bbox")?.map(BoundingBox::parse).transpose()?;
    Ok(ClusterQuery { zoom, bbox, filter: voice_filter(&p)? })
}

pub fn layout_scheme(raw: Option<&str>) -> Result<LayoutScheme, ApiError> {
    let p = Params::parse(raw, &["scheme"])?;
    Ok(p.parsed("scheme")?.unwrap_or(LayoutScheme::Topic))
}

pub struct ReportQuery {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
    pub outlier_filter: Option<bool>,
    pub top_fraction: Option<f64>,
}

pub fn report(raw: Option<&str>) -> Result<ReportQuery, ApiError> {
    let p = Params::parse(raw, &["from", "to", "outlier_filter", "top_fraction"])?;
    Ok(ReportQuery {
        from: p.parsed("from")?,
        to: p.parsed("to")?,
        outlier_filter: p.parsed("outlier_filter")?,
        top_fraction: p.parsed("top_fraction")?,
    })
}

pub fn import_mode(raw: Option<&str>) -> Result<v2v_core::store::ImportMode, ApiError> {
    let p = Params::parse(raw, &["mode"])?;
    match p.single("mode")? {
        None | Some("replace") => Ok(v2v_core::store::ImportMode::Replace),
        Some("merge") => Ok(v2v_core::store::ImportMode::Merge),
        Some(other) => Err(ApiError::bad_request(format!("unknown import mode `{other}`"))),
    }
}
