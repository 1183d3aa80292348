//! Lane-graph map model, loaded from a JSON document.
//!
//! Lengths are meters, angles radians. A map holds lanes (polyline
//! centerlines with widths and graph links), intersections (member lanes
//! plus stop lines), and named regions used by composition triggers.

use crate::geom::{Polyline, Projection, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("failed to read map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse map JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate lane id {0:?}")]
    DuplicateLane(String),
    #[error("lane {lane:?} centerline invalid: {reason}")]
    BadCenterline { lane: String, reason: String },
    #[error("lane {lane:?} has non-positive width")]
    BadWidth { lane: String },
    #[error("lane {lane:?} references unknown {role} lane {target:?}")]
    UnknownLaneRef {
        lane: String,
        role: &'static str,
        target: String,
    },
    #[error("lanes {a:?} and {b:?} have asymmetric adjacency")]
    AsymmetricAdjacency { a: String, b: String },
    #[error("intersection {0:?} references unknown lane {1:?}")]
    UnknownIntersectionLane(String, String),
    #[error("region {0:?} references unknown lane {1:?}")]
    UnknownRegionLane(String, String),
    #[error("region {0:?} invalid: {1}")]
    BadRegion(String, String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaneSpec {
    pub id: String,
    /// Polyline centerline as [x, y] pairs, meters.
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
    #[serde(default)]
    pub successors: Vec<String>,
    #[serde(default)]
    pub left: Option<String>,
    #[serde(default)]
    pub right: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StopLine {
    pub lane: String,
    /// Arc-length position along the lane.
    pub s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntersectionSpec {
    pub id: String,
    pub members: Vec<String>,
    #[serde(default)]
    pub stop_lines: Vec<StopLine>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum RegionShape {
    Circle { center: [f64; 2], radius: f64 },
    LaneSegment { lane: String, from: f64, to: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionSpec {
    pub id: String,
    #[serde(flatten)]
    pub shape: RegionShape,
}

/// On-disk JSON schema of a map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSpec {
    pub lanes: Vec<LaneSpec>,
    #[serde(default)]
    pub intersections: Vec<IntersectionSpec>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
}

/// A lane with its precomputed centerline geometry.
#[derive(Clone, Debug)]
pub struct Lane {
    pub id: String,
    pub centerline: Polyline,
    pub width: f64,
    pub successors: Vec<String>,
    pub left: Option<String>,
    pub right: Option<String>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.centerline.length()
    }

    /// True when `p` projects inside the lane span within half a width laterally.
    pub fn contains(&self, p: Vec2) -> bool {
        let proj = self.centerline.project(p);
        proj.dist <= self.width / 2.0 + 1e-9
    }
}

#[derive(Clone, Debug)]
pub struct MapModel {
    pub lanes: Vec<Lane>,
    pub intersections: Vec<IntersectionSpec>,
    pub regions: Vec<RegionSpec>,
    lane_index: HashMap<String, usize>,
}

impl MapModel {
    pub fn load(path: &Path) -> Result<MapModel, MapError> {
        let text = std::fs::read_to_string(path)?;
        let spec: MapSpec = serde_json::from_str(&text)?;
        MapModel::from_spec(spec)
    }

    pub fn from_spec(spec: MapSpec) -> Result<MapModel, MapError> {
        let mut lane_index = HashMap::new();
        let mut lanes = Vec::with_capacity(spec.lanes.len());
        for l in &spec.lanes {
            if lane_index.insert(l.id.clone(), lanes.len()).is_some() {
                return Err(MapError::DuplicateLane(l.id.clone()));
            }
            if l.centerline.len() < 2 {
                return Err(MapError::BadCenterline {
                    lane: l.id.clone(),
                    reason: "fewer than 2 points".into(),
                });
            }
            for w in l.centerline.windows(2) {
                let d = Vec2::new(w[0][0], w[0][1]).dist(Vec2::new(w[1][0], w[1][1]));
                if d <= 1e-9 {
                    return Err(MapError::BadCenterline {
                        lane: l.id.clone(),
                        reason: "consecutive points coincide".into(),
                    });
                }
            }
            if !(l.width > 0.0) {
                return Err(MapError::BadWidth { lane: l.id.clone() });
            }
            lanes.push(Lane {
                id: l.id.clone(),
                centerline: Polyline::new(
                    l.centerline.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
                ),
                width: l.width,
                successors: l.successors.clone(),
                left: l.left.clone(),
                right: l.right.clone(),
            });
        }

        // Graph references must resolve; adjacency must be mutual.
        for l in &lanes {
            for (role, target) in l
                .successors
                .iter()
                .map(|s| ("successor", s))
                .chain(l.left.iter().map(|s| ("left", s)))
                .chain(l.right.iter().map(|s| ("right", s)))
            {
                if !lane_index.contains_key(target) {
                    return Err(MapError::UnknownLaneRef {
                        lane: l.id.clone(),
                        role,
                        target: target.clone(),
                    });
                }
            }
        }
        for l in &lanes {
            for adj in l.left.iter().chain(l.right.iter()) {
                let other = &lanes[lane_index[adj]];
                let mutual = other.left.as_deref() == Some(l.id.as_str())
                    || other.right.as_deref() == Some(l.id.as_str());
                if !mutual {
                    return Err(MapError::AsymmetricAdjacency {
                        a: l.id.clone(),
                        b: adj.clone(),
                    });
                }
            }
        }
        for ix in &spec.intersections {
            for m in ix.members.iter().chain(ix.stop_lines.iter().map(|s| &s.lane)) {
                if !lane_index.contains_key(m) {
                    return Err(MapError::UnknownIntersectionLane(ix.id.clone(), m.clone()));
                }
            }
        }
        for r in &spec.regions {
            match &r.shape {
                RegionShape::Circle { radius, .. } => {
                    if !(*radius > 0.0) {
                        return Err(MapError::BadRegion(r.id.clone(), "radius <= 0".into()));
                    }
                }
                RegionShape::LaneSegment { lane, from, to } => {
                    if !lane_index.contains_key(lane) {
                        return Err(MapError::UnknownRegionLane(r.id.clone(), lane.clone()));
                    }
                    if !(from < to) {
                        return Err(MapError::BadRegion(r.id.clone(), "from >= to".into()));
                    }
                }
            }
        }

        Ok(MapModel {
            lanes,
            intersections: spec.intersections,
            regions: spec.regions,
            lane_index,
        })
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lane_index.get(id).map(|&i| &self.lanes[i])
    }

    pub fn intersection(&self, id: &str) -> Option<&IntersectionSpec> {
        self.intersections.iter().find(|i| i.id == id)
    }

    pub fn region(&self, id: &str) -> Option<&RegionSpec> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// Nearest lane to a point over the whole map.
    pub fn nearest_lane(&self, p: Vec2) -> Option<(&Lane, Projection)> {
        self.lanes
            .iter()
            .map(|l| (l, l.centerline.project(p)))
            .min_by(|a, b| a.1.dist.partial_cmp(&b.1.dist).unwrap())
    }

    /// Nearest among a named subset of lanes (e.g. an ego route).
    pub fn nearest_of<'a>(&'a self, ids: &[String], p: Vec2) -> Option<(&'a Lane, Projection)> {
        ids.iter()
            .filter_map(|id| self.lane(id))
            .map(|l| (l, l.centerline.project(p)))
            .min_by(|a, b| a.1.dist.partial_cmp(&b.1.dist).unwrap())
    }

    /// Point inside an intersection = within half a width of any member lane.
    pub fn inside_intersection(&self, id: &str, p: Vec2) -> bool {
        self.intersection(id)
            .map(|ix| {
                ix.members
                    .iter()
                    .filter_map(|m| self.lane(m))
                    .any(|l| l.contains(p))
            })
            .unwrap_or(false)
    }

    /// Stop line on `lane`, if any (first match).
    pub fn stop_line_on(&self, lane: &str) -> Option<&StopLine> {
        self.intersections
            .iter()
            .flat_map(|ix| ix.stop_lines.iter())
            .find(|s| s.lane == lane)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_lane_spec() -> MapSpec {
        MapSpec {
            lanes: vec![
                LaneSpec {
                    id: "L0".into(),
                    centerline: vec![[0.0, 0.0], [100.0, 0.0]],
                    width: 3.5,
                    successors: vec![],
                    left: Some("L1".into()),
                    right: None,
                },
                LaneSpec {
                    id: "L1".into(),
                    centerline: vec![[0.0, 3.5], [100.0, 3.5]],
                    width: 3.5,
                    successors: vec![],
                    left: None,
                    right: Some("L0".into()),
                },
            ],
            intersections: vec![],
            regions: vec![],
        }
    }

    #[test]
    fn loads_valid_two_lane_map() {
        let map = MapModel::from_spec(two_lane_spec()).unwrap();
        assert_eq!(map.lanes.len(), 2);
        let (lane, proj) = map.nearest_lane(Vec2::new(50.0, 0.5)).unwrap();
        assert_eq!(lane.id, "L0");
        assert!((proj.s - 50.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_asymmetric_adjacency() {
        let mut spec = two_lane_spec();
        spec.lanes[1].right = None;
        match MapModel::from_spec(spec) {
            Err(MapError::AsymmetricAdjacency { .. }) => {}
            other => panic!("expected asymmetric adjacency error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_successor() {
        let mut spec = two_lane_spec();
        spec.lanes[0].successors = vec!["nope".into()];
        assert!(matches!(
            MapModel::from_spec(spec),
            Err(MapError::UnknownLaneRef { .. })
        ));
    }

    #[test]
    fn rejects_degenerate_centerline() {
        let mut spec = two_lane_spec();
        spec.lanes[0].centerline = vec![[0.0, 0.0], [0.0, 0.0]];
        assert!(matches!(
            MapModel::from_spec(spec),
            Err(MapError::BadCenterline { .. })
        ));
    }
}
