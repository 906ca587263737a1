use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::mercator::{cell_of, world_xy};
use super::GeoError;
use crate::exec::Execution;
use crate::model::{LatLon, TopicId, VoiceId};

pub const ZOOM_MIN: u8 = 0;
pub const ZOOM_MAX: u8 = 22;
/// Grid cell edge in screen pixels, roughly one marker footprint.
pub const CELL_PX: u32 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub voice_id: VoiceId,
    pub coordinates: LatLon,
    #[serde(default)]
    pub topic_ids: BTreeSet<TopicId>,
}

/// Geographic viewport in degrees. Antimeridian-crossing boxes are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub south: f64,
    pub west: f64,
    pub north: f64,
    pub east: f64,
}

impl BoundingBox {
    pub fn new(south: f64, west: f64, north: f64, east: f64) -> Result<Self, GeoError> {
        let b = Self { south, west, north, east };
        let corners_ok = LatLon::new(south, west).is_valid() && LatLon::new(north, east).is_valid();
        if !corners_ok || south > north || west > east {
            return Err(GeoError::InvalidBbox(format!("{south},{west},{north},{east}")));
        }
        Ok(b)
    }

    /// Parses `south,west,north,east`.
    pub fn parse(s: &str) -> Result<Self, GeoError> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| GeoError::InvalidBbox(s.to_owned()))?;
        match parts[..] {
            [south, west, north, east] => Self::new(south, west, north, east),
            _ => Err(GeoError::InvalidBbox(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCluster {
    pub centroid: LatLon,
    pub member_voice_ids: Vec<VoiceId>,
    pub dominant_topic_id: Option<TopicId>,
    pub zoom: u8,
    /// Grid cell (column, row) at this zoom.
    pub cell: (u32, u32),
}

impl MapCluster {
    pub fn size(&self) -> usize {
        self.member_voice_ids.len()
    }
}

pub fn check_zoom(zoom: i64) -> Result<u8, GeoError> {
    if (i64::from(ZOOM_MIN)..=i64::from(ZOOM_MAX)).contains(&zoom) {
        Ok(zoom as u8)
    } else {
        Err(GeoError::InvalidZoom(zoom))
    }
}

/// Grid clustering in Web-Mercator pixel space: one cluster per non-empty
/// 64×64 px cell at `zoom`. `palette` maps topics to their color slot and
/// breaks ties when picking a cluster's dominant topic.
pub fn cluster_map_points(
    points: &[MapPoint],
    zoom: u8,
    viewport: Option<&BoundingBox>,
    palette: &HashMap<TopicId, u32>,
) -> Result<Vec<MapCluster>, GeoError> {
    cluster_map_points_with(points, zoom, viewport, palette, Execution::default())
}

pub fn cluster_map_points_with(
    points: &[MapPoint],
    zoom: u8,
    viewport: Option<&BoundingBox>,
    palette: &HashMap<TopicId, u32>,
    exec: Execution,
) -> Result<Vec<MapCluster>, GeoError> {
    check_zoom(i64::from(zoom))?;
    if let Some(bad) = points.iter().find(|p| !p.coordinates.is_valid()) {
        return Err(GeoError::InvalidCoordinates(bad.voice_id.to_string()));
    }
    let cells = exec.map(points, |p| cell_of(world_xy(p.coordinates), zoom, CELL_PX));

    let window = viewport.map(|b| {
        let (x0, y0) = cell_of(world_xy(LatLon::new(b.north, b.west)), zoom, CELL_PX);
        let (x1, y1) = cell_of(world_xy(LatLon::new(b.south, b.east)), zoom, CELL_PX);
        (x0..=x1, y0..=y1)
    });

    // row-major order
    let mut groups: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (i, &(cx, cy)) in cells.iter().enumerate() {
        if let Some((xs, ys)) = &window {
            if !xs.contains(&cx) || !ys.contains(&cy) {
                continue;
            }
        }
        groups.entry((cy, cx)).or_default().push(i);
    }
    let groups: Vec<((u32, u32), Vec<usize>)> = groups.into_iter().collect();

    Ok(exec.map(&groups, |((cy, cx), members)| {
        let mut members: Vec<&MapPoint> = members.iter().map(|&i| &points[i]).collect();
        members.sort_by(|a, b| a.voice_id.cmp(&b.voice_id));
        let n = members.len() as f64;
        let (lat, lon) = members
            .iter()
            .fold((0.0, 0.0), |(la, lo), p| (la + p.coordinates.lat, lo + p.coordinates.lon));
        MapCluster {
            centroid: LatLon::new(lat / n, lon / n),
            member_voice_ids: members.iter().map(|p| p.voice_id.clone()).collect(),
            dominant_topic_id: dominant_topic(&members, palette),
            zoom,
            cell: (*cx, *cy),
        }
    }))
}

fn dominant_topic(members: &[&MapPoint], palette: &HashMap<TopicId, u32>) -> Option<TopicId> {
    let mut counts: HashMap<&TopicId, usize> = HashMap::new();
    for p in members {
        for t in &p.topic_ids {
            *counts.entry(t).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .min_by(|(ta, ca), (tb, cb)| {
            cb.cmp(ca)
                .then_with(|| {
                    let slot = |t: &TopicId| palette.get(t).copied().unwrap_or(u32::MAX);
                    slot(ta).cmp(&slot(tb))
                })
                .then_with(|| ta.cmp(tb))
        })
        .map(|(t, _)| t.clone())
}
