//! Thematic circle layout: one circle per category, area proportional to the
//! number of associated voices, members drawn as a sunflower inside.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::model::{citation_index, Corpus, OutputKind, VoiceId};

/// Radius of a one-voice circle, in layout units.
pub const BASE_RADIUS: f64 = 4.0;
/// Minimum clearance kept between neighbouring circles.
pub const CIRCLE_GAP: f64 = 1.0;
/// Member points stay within this fraction of the circle radius.
const MEMBER_EXTENT: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutScheme {
    Topic,
    Goal,
    Recommendation,
}

impl std::str::FromStr for LayoutScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topic" => Ok(LayoutScheme::Topic),
            "goal" => Ok(LayoutScheme::Goal),
            "recommendation" | "strategy" => Ok(LayoutScheme::Recommendation),
            other => Err(format!("unknown layout scheme `{other}`")),
        }
    }
}

/// Input to [`layout_categories`]: a category and the voices in it.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryMembers {
    pub category_id: String,
    pub members: Vec<(VoiceId, Option<u32>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberPoint {
    pub voice_id: VoiceId,
    pub x: f64,
    pub y: f64,
    pub color_index: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCircle {
    pub category_id: String,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub member_points: Vec<MemberPoint>,
}

pub fn radius_for(count: usize) -> f64 {
    BASE_RADIUS * (count as f64).sqrt()
}

/// Layout of the corpus grouped by topic, goal or recommendation.
pub fn cluster_layout(corpus: &Corpus, scheme: LayoutScheme) -> Vec<CategoryCircle> {
    cluster_layout_with(corpus, scheme, Execution::default())
}

pub fn cluster_layout_with(corpus: &Corpus, scheme: LayoutScheme, exec: Execution) -> Vec<CategoryCircle> {
    layout_categories(categories_for(corpus, scheme), exec)
}

/// Voice memberships per category for a scheme. Categories without voices
/// are dropped.
pub fn categories_for(corpus: &Corpus, scheme: LayoutScheme) -> Vec<CategoryMembers> {
    let colors: BTreeMap<&str, u32> = corpus.topics.iter().map(|t| (t.id.as_str(), t.color_index)).collect();
    let voice_color = |v: &crate::model::Voice| v.topic_ids.iter().filter_map(|t| colors.get(t.as_str()).copied()).min();

    let cats: Vec<CategoryMembers> = match scheme {
        LayoutScheme::Topic => corpus
            .topics
            .iter()
            .map(|t| CategoryMembers {
                category_id: t.id.0.clone(),
                members: corpus
                    .voices
                    .iter()
                    .filter(|v| v.topic_ids.contains(&t.id))
                    .map(|v| (v.id.clone(), Some(t.color_index)))
                    .collect(),
            })
            .collect(),
        LayoutScheme::Goal | LayoutScheme::Recommendation => {
            let kind = if scheme == LayoutScheme::Goal { OutputKind::Goal } else { OutputKind::Recommendation };
            let index = citation_index(corpus);
            let idx = corpus.index();
            corpus
                .outputs
                .iter()
                .filter(|o| o.kind == kind)
                .map(|o| CategoryMembers {
                    category_id: o.id.0.clone(),
                    members: index[&o.id]
                        .iter()
                        .filter_map(|vid| idx.voices.get(vid.as_str()))
                        .map(|v| (v.id.clone(), voice_color(v)))
                        .collect(),
                })
                .collect()
        }
    };
    cats.into_iter().filter(|c| !c.members.is_empty()).collect()
}

/// Places circles greedily along an Archimedean spiral, largest first, and
/// fills each with a phyllotaxis pattern. Deterministic for a given input.
pub fn layout_categories(mut categories: Vec<CategoryMembers>, exec: Execution) -> Vec<CategoryCircle> {
    categories.retain(|c| !c.members.is_empty());
    categories.sort_by(|a, b| b.members.len().cmp(&a.members.len()).then_with(|| a.category_id.cmp(&b.category_id)));
    for c in categories.iter_mut() {
        c.members.sort_by(|a, b| a.0.cmp(&b.0));
    }

    let mut placed: Vec<(f64, f64, f64)> = Vec::with_capacity(categories.len());
    for c in &categories {
        let r = radius_for(c.members.len());
        let (x, y) = if placed.is_empty() { (0.0, 0.0) } else { spiral_position(r, &placed) };
        placed.push((x, y, r));
    }

    let jobs: Vec<(&CategoryMembers, (f64, f64, f64))> = categories.iter().zip(placed).collect();
    exec.map(&jobs, |(c, (x, y, r))| CategoryCircle {
        category_id: c.category_id.clone(),
        x: *x,
        y: *y,
        radius: *r,
        member_points: sunflower(*x, *y, *r, &c.members),
    })
}

fn fits(x: f64, y: f64, r: f64, placed: &[(f64, f64, f64)]) -> bool {
    placed
        .iter()
        .all(|&(px, py, pr)| (x - px).hypot(y - py) >= r + pr + CIRCLE_GAP)
}

/// First free spot on a spiral `ρ = a·θ` around the origin. Pitch and step
/// scale with the circle being placed.
fn spiral_position(r: f64, placed: &[(f64, f64, f64)]) -> (f64, f64) {
    let pitch = (r * 0.5).max(0.5);
    let a = pitch / (2.0 * PI);
    let step = (r * 0.25).max(0.25);
    let mut theta: f64 = 0.0;
    loop {
        let rho = a * theta;
        let (x, y) = (rho * theta.cos(), rho * theta.sin());
        if fits(x, y, r, placed) {
            return (x, y);
        }
        theta += if rho < step { 0.5 } else { step / rho };
    }
}

fn sunflower(cx: f64, cy: f64, r: f64, members: &[(VoiceId, Option<u32>)]) -> Vec<MemberPoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let n = members.len() as f64;
    let extent = r * MEMBER_EXTENT;
    members
        .iter()
        .enumerate()
        .map(|(k, (voice_id, color_index))| {
            let rho = extent * ((k as f64 + 0.5) / n).sqrt();
            let theta = k as f64 * golden;
            MemberPoint {
                voice_id: voice_id.clone(),
                x: cx + rho * theta.cos(),
                y: cy + rho * theta.sin(),
                color_index: *color_index,
            }
        })
        .collect()
}
