//! Weather- and rig-filtered view of the world.
//!
//! Cameras see the half-plane they face (front or rear) up to the camera
//! visibility, lose detections at the dropout rate and report noisy gaps.
//! Semantic LiDAR sees all around up to its own range and is exact.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream;
use crate::road::RoadNetwork;
use crate::traffic::{VehicleState, WorldState};
use crate::weather::WeatherEffects;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorRig {
    pub front_cameras: u8,
    pub rear_cameras: u8,
    pub lidar: bool,
}

impl Default for SensorRig {
    fn default() -> Self {
        Self::SIX_CAMERAS
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown sensor rig `{0}` (expected 3cam, 6cam, 3cam+lidar or 6cam+lidar)")]
pub struct UnknownRig(pub String);

impl SensorRig {
    pub const FRONT_CAMERAS: SensorRig = SensorRig {
        front_cameras: 3,
        rear_cameras: 0,
        lidar: false,
    };
    pub const SIX_CAMERAS: SensorRig = SensorRig {
        front_cameras: 3,
        rear_cameras: 3,
        lidar: false,
    };

    /// The four rigs of the camera/LiDAR ablation grid.
    pub const ABLATION: [SensorRig; 4] = [
        SensorRig::FRONT_CAMERAS,
        SensorRig::SIX_CAMERAS,
        SensorRig::FRONT_CAMERAS.with_lidar(),
        SensorRig::SIX_CAMERAS.with_lidar(),
    ];

    pub const fn with_lidar(self) -> Self {
        SensorRig {
            lidar: true,
            ..self
        }
    }

    pub fn camera_count(&self) -> u32 {
        u32::from(self.front_cameras) + u32::from(self.rear_cameras)
    }

    pub fn covers(&self, sector: Sector) -> bool {
        match sector {
            Sector::Front => self.front_cameras > 0,
            Sector::Rear => self.rear_cameras > 0,
        }
    }
}

impl fmt::Display for SensorRig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}cam", self.camera_count())?;
        if self.lidar {
            f.write_str("+lidar")?;
        }
        Ok(())
    }
}

impl FromStr for SensorRig {
    type Err = UnknownRig;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (cams, lidar) = match s.strip_suffix("+lidar") {
            Some(head) => (head, true),
            None => (s, false),
        };
        let rig = match cams {
            "3cam" => SensorRig::FRONT_CAMERAS,
            "6cam" => SensorRig::SIX_CAMERAS,
            "0cam" if lidar => SensorRig {
                front_cameras: 0,
                rear_cameras: 0,
                lidar,
            },
            _ => return Err(UnknownRig(s.to_string())),
        };
        Ok(SensorRig { lidar, ..rig })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Front,
    Rear,
}

impl Sector {
    pub fn as_str(self) -> &'static str {
        match self {
            Sector::Front => "front",
            Sector::Rear => "rear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionSource {
    Camera,
    Lidar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub vehicle_id: u32,
    pub sector: Sector,
    pub lane_index: usize,
    /// Bumper-to-bumper gap, metres.
    pub gap: f64,
    /// Detected vehicle speed minus ego speed.
    pub relative_speed: f64,
    pub source: DetectionSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarSummary {
    pub num_points: usize,
    pub mean_distance: Option<f64>,
    pub min_distance: Option<f64>,
    pub max_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub ego: VehicleState,
    /// Sorted front first, then by increasing gap.
    pub detected: Vec<Detection>,
    pub visibility_used: f64,
    pub lidar: Option<LidarSummary>,
    pub weather_name: String,
    pub lane_count: usize,
    pub speed_limit: f64,
}

impl Observation {
    /// Closest detection ahead in the ego lane.
    pub fn lead(&self) -> Option<&Detection> {
        self.in_lane(self.ego.lane_index)
            .filter(|d| d.sector == Sector::Front)
            .min_by(|a, b| a.gap.total_cmp(&b.gap))
    }

    pub fn in_lane(&self, lane: usize) -> impl Iterator<Item = &Detection> {
        self.detected.iter().filter(move |d| d.lane_index == lane)
    }
}

/// Geometry of one NPC relative to the ego.
struct Relative {
    sector: Sector,
    gap: f64,
    range: f64,
}

fn relative(ego: &VehicleState, npc: &VehicleState, lane_width: f64) -> Relative {
    let sector = if npc.s >= ego.s {
        Sector::Front
    } else {
        Sector::Rear
    };
    let gap = ego.gap_to(npc).max(0.0);
    let lateral = (npc.lane_coordinate(lane_width) - ego.lane_coordinate(lane_width)) * lane_width;
    Relative {
        sector,
        gap,
        range: gap.hypot(lateral),
    }
}

/// Build the agent-facing view of `world`.
///
/// Dropout and noise draws come from a stream keyed by `(seed, tick, vehicle
/// id)`, so the same vehicle gets the same draws whatever the rig or
/// visibility. That makes detection sets monotone in rig and in fog.
pub fn observe(
    world: &WorldState,
    road: &RoadNetwork,
    rig: &SensorRig,
    effects: &WeatherEffects,
    weather_name: &str,
    seed: u64,
) -> Observation {
    let ego = world.ego();
    let lane_width = road.lane_width();
    let camera_vis = if rig.camera_count() > 0 {
        effects.camera_visibility
    } else {
        0.0
    };
    let lidar_vis = if rig.lidar {
        effects.lidar_visibility
    } else {
        0.0
    };
    let visibility_used = camera_vis.max(lidar_vis);

    let mut detected = Vec::new();
    for npc in world.npcs() {
        let rel = relative(ego, npc, lane_width);
        let mut rng = stream(seed, "detect", &[world.tick, u64::from(npc.id)]);
        let keep: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);

        let lidar_hit = rig.lidar && rel.range <= lidar_vis;
        let camera_hit = rig.covers(rel.sector)
            && rel.range <= camera_vis
            && keep >= effects.detection_dropout;
        let (gap, source) = if lidar_hit {
            (rel.gap, DetectionSource::Lidar)
        } else if camera_hit {
            let noisy = rel.gap + effects.position_noise_sigma * z;
            (noisy.clamp(0.0, visibility_used), DetectionSource::Camera)
        } else {
            continue;
        };
        detected.push(Detection {
            vehicle_id: npc.id,
            sector: rel.sector,
            lane_index: npc.lane_index,
            gap,
            relative_speed: npc.speed - ego.speed,
            source,
        });
    }
    detected.sort_by(|a, b| {
        a.sector
            .cmp(&b.sector)
            .then(a.gap.total_cmp(&b.gap))
            .then(a.vehicle_id.cmp(&b.vehicle_id))
    });

    Observation {
        ego: ego.clone(),
        detected,
        visibility_used,
        lidar: rig.lidar.then(|| lidar_summary(world, road, effects)),
        weather_name: weather_name.to_string(),
        lane_count: road.lane_count(),
        speed_limit: road.speed_limit(),
    }
}

/// One semantic LiDAR return per NPC within LiDAR range, summarised.
pub fn lidar_summary(world: &WorldState, road: &RoadNetwork, effects: &WeatherEffects) -> LidarSummary {
    let ego = world.ego();
    let ranges: Vec<f64> = world
        .npcs()
        .map(|npc| relative(ego, npc, road.lane_width()).range)
        .filter(|&r| r <= effects.lidar_visibility)
        .collect();
    if ranges.is_empty() {
        return LidarSummary {
            num_points: 0,
            mean_distance: None,
            min_distance: None,
            max_distance: None,
        };
    }
    let n = ranges.len();
    LidarSummary {
        num_points: n,
        mean_distance: Some(ranges.iter().sum::<f64>() / n as f64),
        min_distance: ranges.iter().copied().reduce(f64::min),
        max_distance: ranges.iter().copied().reduce(f64::max),
    }
}
