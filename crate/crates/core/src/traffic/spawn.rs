use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{VehicleState, WorldState, DEFAULT_VEHICLE_LENGTH, EGO_ID};
use crate::rng::stream;
use crate::road::RoadNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSpec {
    pub n_vehicles: usize,
    /// Minimum same-lane centre spacing, metres.
    pub spacing: f64,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        Self {
            n_vehicles: 8,
            spacing: 25.0,
            speed_min: 8.0,
            speed_max: 13.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SpawnError {
    #[error("road fits only {available} vehicles at {spacing} m spacing, {requested} requested")]
    RoadTooShort {
        requested: usize,
        available: usize,
        spacing: f64,
    },
    #[error("ego lane {lane} does not exist on a {lane_count}-lane road")]
    BadEgoLane { lane: usize, lane_count: usize },
    #[error("invalid traffic spec: {0}")]
    InvalidSpec(String),
}

/// Where and how fast the ego starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoStart {
    pub lane: usize,
    pub s: f64,
    pub speed: f64,
}

/// Place the ego and `n_vehicles` NPCs.
///
/// Each lane gets a grid of candidate slots `spacing` apart with a seeded
/// phase; slots closer than `spacing` to the ego in its lane are dropped, and
/// NPCs take a seeded random subset of the remaining slots. Same seed, same
/// world, bit for bit.
pub fn spawn_traffic(
    road: &RoadNetwork,
    traffic: &TrafficSpec,
    ego: EgoStart,
    seed: u64,
) -> Result<WorldState, SpawnError> {
    if ego.lane >= road.lane_count() {
        return Err(SpawnError::BadEgoLane {
            lane: ego.lane,
            lane_count: road.lane_count(),
        });
    }
    if !(traffic.spacing > 0.0) {
        return Err(SpawnError::InvalidSpec(format!(
            "spacing must be positive, got {}",
            traffic.spacing
        )));
    }
    if !(traffic.speed_min >= 0.0 && traffic.speed_max >= traffic.speed_min) {
        return Err(SpawnError::InvalidSpec(format!(
            "speed range [{}, {}] is invalid",
            traffic.speed_min, traffic.speed_max
        )));
    }

    let mut rng = stream(seed, "spawn", &[]);
    let length = road.total_length();
    let mut slots = Vec::new();
    for lane in 0..road.lane_count() {
        let phase = rng.random_range(0.0..traffic.spacing);
        let mut k = 0u32;
        loop {
            let s = phase + f64::from(k) * traffic.spacing;
            if s > length {
                break;
            }
            if lane != ego.lane || (s - ego.s).abs() >= traffic.spacing {
                slots.push((lane, s));
            }
            k += 1;
        }
    }
    if slots.len() < traffic.n_vehicles {
        return Err(SpawnError::RoadTooShort {
            requested: traffic.n_vehicles,
            available: slots.len(),
            spacing: traffic.spacing,
        });
    }
    slots.shuffle(&mut rng);
    let mut chosen: Vec<_> = slots.into_iter().take(traffic.n_vehicles).collect();
    chosen.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut vehicles = Vec::with_capacity(traffic.n_vehicles + 1);
    vehicles.push(VehicleState {
        id: EGO_ID,
        lane_index: ego.lane,
        s: ego.s,
        lateral_offset: 0.0,
        speed: ego.speed,
        accel: 0.0,
        length: DEFAULT_VEHICLE_LENGTH,
        is_ego: true,
    });
    for (i, (lane, s)) in chosen.into_iter().enumerate() {
        let speed = if traffic.speed_max > traffic.speed_min {
            rng.random_range(traffic.speed_min..traffic.speed_max)
        } else {
            traffic.speed_min
        };
        vehicles.push(VehicleState {
            id: i as u32 + 1,
            lane_index: lane,
            s,
            lateral_offset: 0.0,
            speed,
            accel: 0.0,
            length: DEFAULT_VEHICLE_LENGTH,
            is_ego: false,
        });
    }
    Ok(WorldState {
        tick: 0,
        time: 0.0,
        vehicles,
        collisions: Vec::new(),
    })
}
