//! Multilane highway geometry.
//!
//! A road is an ordered chain of straight and constant-curvature segments that
//! every lane follows in parallel. Vehicles are located by arc position `s`
//! along the reference line plus a lane index, so the geometry only matters
//! for curvature lookups (lateral acceleration in curves) and route length.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 50 km/h.
pub const DEFAULT_SPEED_LIMIT: f64 = 13.89;
pub const DEFAULT_LANE_WIDTH: f64 = 3.5;
pub const DEFAULT_LANE_COUNT: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum RoadError {
    #[error("segment {index} has non-positive length {length}")]
    ZeroLengthSegment { index: usize, length: f64 },
    #[error("road needs at least 2 lanes, got {0}")]
    TooFewLanes(usize),
    #[error("road has no segments")]
    Empty,
    #[error("lane width must be positive, got {0}")]
    BadLaneWidth(f64),
    #[error("speed limit must be positive, got {0}")]
    BadSpeedLimit(f64),
    #[error("segment {index} has non-finite curvature")]
    BadCurvature { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Straight { length: f64 },
    /// Constant curvature arc; curvature in 1/m, sign gives turn direction.
    Arc { curvature: f64, length: f64 },
}

impl Segment {
    pub fn length(&self) -> f64 {
        match *self {
            Segment::Straight { length } | Segment::Arc { length, .. } => length,
        }
    }

    pub fn curvature(&self) -> f64 {
        match *self {
            Segment::Straight { .. } => 0.0,
            Segment::Arc { curvature, .. } => curvature,
        }
    }

    /// Heading change accumulated over the whole segment, in radians.
    pub fn heading_change(&self) -> f64 {
        self.length() * self.curvature()
    }
}

/// Road description as written in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadSpec {
    pub lane_count: usize,
    pub lane_width: f64,
    pub speed_limit: f64,
    pub segments: Vec<Segment>,
}

impl Default for RoadSpec {
    fn default() -> Self {
        Self {
            lane_count: DEFAULT_LANE_COUNT,
            lane_width: DEFAULT_LANE_WIDTH,
            speed_limit: DEFAULT_SPEED_LIMIT,
            segments: vec![
                Segment::Straight { length: 200.0 },
                // quarter turn of radius 100 m
                Segment::Arc {
                    curvature: 0.01,
                    length: 157.08,
                },
            ],
        }
    }
}

/// Validated road network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoadNetwork {
    segments: Vec<Segment>,
    /// Arc position at which each segment starts.
    starts: Vec<f64>,
    lane_count: usize,
    lane_width: f64,
    speed_limit: f64,
    total_length: f64,
}

pub fn build_road(spec: &RoadSpec) -> Result<RoadNetwork, RoadError> {
    if spec.lane_count < 2 {
        return Err(RoadError::TooFewLanes(spec.lane_count));
    }
    if spec.segments.is_empty() {
        return Err(RoadError::Empty);
    }
    if !(spec.lane_width > 0.0) {
        return Err(RoadError::BadLaneWidth(spec.lane_width));
    }
    if !(spec.speed_limit > 0.0) {
        return Err(RoadError::BadSpeedLimit(spec.speed_limit));
    }
    let mut starts = Vec::with_capacity(spec.segments.len());
    let mut total = 0.0;
    for (index, seg) in spec.segments.iter().enumerate() {
        let length = seg.length();
        if !(length > 0.0) || !length.is_finite() {
            return Err(RoadError::ZeroLengthSegment { index, length });
        }
        if !seg.curvature().is_finite() {
            return Err(RoadError::BadCurvature { index });
        }
        starts.push(total);
        total += length;
    }
    Ok(RoadNetwork {
        segments: spec.segments.clone(),
        starts,
        lane_count: spec.lane_count,
        lane_width: spec.lane_width,
        speed_limit: spec.speed_limit,
        total_length: total,
    })
}

impl RoadNetwork {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn lane_count(&self) -> usize {
        self.lane_count
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    pub fn speed_limit(&self) -> f64 {
        self.speed_limit
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Index of the segment containing arc position `s`, clamped to the road.
    pub fn segment_index_at(&self, s: f64) -> usize {
        // starts is sorted; the last start <= s wins
        match self.starts.partition_point(|&start| start <= s) {
            0 => 0,
            n => n - 1,
        }
    }

    /// Curvature of the segment under arc position `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        self.segments[self.segment_index_at(s)].curvature()
    }

    /// Heading of the reference line at `s`, relative to the heading at 0.
    pub fn heading_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_length);
        let idx = self.segment_index_at(s);
        let before: f64 = self.segments[..idx].iter().map(Segment::heading_change).sum();
        before + (s - self.starts[idx]) * self.segments[idx].curvature()
    }

    pub fn spec(&self) -> RoadSpec {
        RoadSpec {
            lane_count: self.lane_count,
            lane_width: self.lane_width,
            speed_limit: self.speed_limit,
            segments: self.segments.clone(),
        }
    }
}
