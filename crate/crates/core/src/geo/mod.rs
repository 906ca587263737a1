//! Geocoding, zoom-responsive map clustering and the thematic circle layout.

mod cluster;
mod geocode;
mod layout;
pub mod mercator;

use thiserror::Error;

pub use cluster::{
    check_zoom, cluster_map_points, cluster_map_points_with, BoundingBox, MapCluster, MapPoint, CELL_PX, ZOOM_MAX,
    ZOOM_MIN,
};
pub use geocode::{
    CachedLookup, Candidate, GeocodeOutcome, GeocodeProvider, GeocodeResult, Geocoder, ProviderError, RetryPolicy,
    StubProvider, TokenBucket, STUB_FIXTURE,
};
pub use layout::{
    categories_for, cluster_layout, cluster_layout_with, layout_categories, radius_for, CategoryCircle,
    CategoryMembers, LayoutScheme, MemberPoint, BASE_RADIUS, CIRCLE_GAP,
};

use crate::model::Corpus;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("location text is empty")]
    EmptyInput,
    #[error("zoom {0} outside [{ZOOM_MIN}, {ZOOM_MAX}]")]
    InvalidZoom(i64),
    #[error("invalid bounding box `{0}` (expected south,west,north,east)")]
    InvalidBbox(String),
    #[error("voice {0} has out-of-range coordinates")]
    InvalidCoordinates(String),
    #[error("geocoder configuration: {0}")]
    Config(String),
}

/// Geotagged voices of a corpus as map points.
pub fn map_points<'a>(voices: impl IntoIterator<Item = &'a crate::model::Voice>) -> Vec<MapPoint> {
    voices
        .into_iter()
        .filter_map(|v| {
            v.coordinates.map(|c| MapPoint {
                voice_id: v.id.clone(),
                coordinates: c,
                topic_ids: v.topic_ids.clone(),
            })
        })
        .collect()
}

/// Tags geotagged voices that have no sub-geography with the first
/// sub-geography whose boundary contains them. Existing assignments are kept.
/// Returns the ids of voices that were tagged.
pub fn assign_sub_geographies(corpus: &mut Corpus) -> Vec<crate::model::VoiceId> {
    let areas = &corpus.sub_geographies;
    let mut tagged = Vec::new();
    for v in corpus.voices.iter_mut().filter(|v| v.sub_geography_id.is_none()) {
        let Some(p) = v.coordinates else { continue };
        if let Some(g) = areas.iter().find(|g| g.contains(p)) {
            v.sub_geography_id = Some(g.id.clone());
            tagged.push(v.id.clone());
        }
    }
    tagged
}

/// Topic → palette slot lookup for cluster coloring.
pub fn palette(corpus: &Corpus) -> std::collections::HashMap<crate::model::TopicId, u32> {
    corpus.topics.iter().map(|t| (t.id.clone(), t.color_index)).collect()
}
