//! Stepped microsimulation of the ego vehicle and surrounding traffic.
//!
//! Vehicles live on the lane graph of a [`RoadNetwork`]: a lane index plus an
//! arc position. Collisions and TTC are purely longitudinal within a lane.

mod control;
mod idm;
mod spawn;

use serde::{Deserialize, Serialize};

pub use control::{apply_decision, ControlParams, EgoControl};
pub use idm::IdmParams;
pub use spawn::{spawn_traffic, EgoStart, SpawnError, TrafficSpec};

use crate::road::RoadNetwork;

pub const EGO_ID: u32 = 0;
pub const DEFAULT_VEHICLE_LENGTH: f64 = 4.5;
pub const DEFAULT_DT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u32,
    pub lane_index: usize,
    /// Arc position of the vehicle centre along the road.
    pub s: f64,
    /// Offset from the centre of `lane_index`, positive towards higher lane
    /// indices (to the right).
    pub lateral_offset: f64,
    pub speed: f64,
    pub accel: f64,
    pub length: f64,
    pub is_ego: bool,
}

impl VehicleState {
    /// Continuous lane coordinate: lane centres sit on integers.
    pub fn lane_coordinate(&self, lane_width: f64) -> f64 {
        self.lane_index as f64 + self.lateral_offset / lane_width
    }

    pub fn front(&self) -> f64 {
        self.s + self.length / 2.0
    }

    pub fn rear(&self) -> f64 {
        self.s - self.length / 2.0
    }

    /// Bumper-to-bumper gap from `self` forward to `other`, ignoring lanes.
    /// Negative when the two bodies overlap.
    pub fn gap_to(&self, other: &VehicleState) -> f64 {
        if other.s >= self.s {
            other.rear() - self.front()
        } else {
            self.rear() - other.front()
        }
    }
}

/// Immutable snapshot of the simulated world at one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub time: f64,
    pub vehicles: Vec<VehicleState>,
    /// Collisions detected on the step that produced this state, as ordered
    /// `(lower id, higher id)` pairs.
    pub collisions: Vec<(u32, u32)>,
}

impl WorldState {
    pub fn ego(&self) -> &VehicleState {
        self.vehicles
            .iter()
            .find(|v| v.is_ego)
            .expect("world state always holds an ego vehicle")
    }

    pub fn npcs(&self) -> impl Iterator<Item = &VehicleState> {
        self.vehicles.iter().filter(|v| !v.is_ego)
    }

    pub fn ego_collided(&self) -> bool {
        self.collisions
            .iter()
            .any(|&(a, b)| a == EGO_ID || b == EGO_ID)
    }

    /// Nearest vehicle strictly ahead of `subject` in the same lane.
    pub fn leader_of(&self, subject: &VehicleState) -> Option<&VehicleState> {
        self.vehicles
            .iter()
            .filter(|v| v.id != subject.id && v.lane_index == subject.lane_index && v.s > subject.s)
            .min_by(|a, b| a.s.total_cmp(&b.s))
    }
}

/// Time to collision of the ego with its lead vehicle; `+inf` when there is
/// no lead or the gap is not closing.
pub fn ttc(world: &WorldState) -> f64 {
    let ego = world.ego();
    match world.leader_of(ego) {
        Some(lead) => ttc_between(ego.gap_to(lead), ego.speed, lead.speed),
        None => f64::INFINITY,
    }
}

/// TTC for a follower closing on a leader across `gap` metres.
pub fn ttc_between(gap: f64, follower_speed: f64, leader_speed: f64) -> f64 {
    let closing = follower_speed - leader_speed;
    if closing > 0.0 {
        gap.max(0.0) / closing
    } else {
        f64::INFINITY
    }
}

/// All same-lane longitudinal overlaps, as sorted `(lower, higher)` id pairs.
pub fn detect_collisions(vehicles: &[VehicleState]) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for (i, a) in vehicles.iter().enumerate() {
        for b in &vehicles[i + 1..] {
            if a.lane_index == b.lane_index && (a.s - b.s).abs() < (a.length + b.length) / 2.0 {
                pairs.push((a.id.min(b.id), a.id.max(b.id)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Deterministic stepping rules shared by every tick of a run.
#[derive(Debug, Clone)]
pub struct Simulator {
    road: RoadNetwork,
    idm: IdmParams,
    lane_change_duration: f64,
}

impl Simulator {
    pub fn new(road: RoadNetwork, idm: IdmParams, lane_change_duration: f64) -> Self {
        Self {
            road,
            idm,
            lane_change_duration,
        }
    }

    pub fn road(&self) -> &RoadNetwork {
        &self.road
    }

    /// Advance the world by `dt`. NPCs follow IDM in their lane, the ego
    /// integrates its commanded acceleration clipped to the friction cap.
    /// NPCs that run off the end of the road are removed.
    pub fn step(
        &self,
        world: &WorldState,
        control: &EgoControl,
        friction: f64,
        dt: f64,
    ) -> (WorldState, EgoControl) {
        let cap = friction * crate::weather::GRAVITY;
        let speed_limit = self.road.speed_limit();
        let mut next_control = control.clone();
        let mut vehicles = Vec::with_capacity(world.vehicles.len());

        for v in &world.vehicles {
            let mut nv = v.clone();
            let accel = if v.is_ego {
                control.commanded_accel.clamp(-cap, cap)
            } else {
                let lead = world.leader_of(v).map(|l| (v.gap_to(l), l.speed));
                self.idm.accel(v.speed, speed_limit, lead).clamp(-cap, cap)
            };
            integrate(&mut nv, accel, dt);
            if v.is_ego {
                next_control = control.advance_lateral(&mut nv, self.road.lane_width(), self.lane_change_duration, dt);
            } else if nv.s > self.road.total_length() {
                continue;
            }
            vehicles.push(nv);
        }

        let tick = world.tick + 1;
        let collisions = detect_collisions(&vehicles);
        (
            WorldState {
                tick,
                time: tick as f64 * dt,
                vehicles,
                collisions,
            },
            next_control,
        )
    }
}

/// Constant-acceleration update with the speed floored at zero; `accel`
/// records the acceleration actually realised over the step.
fn integrate(v: &mut VehicleState, accel: f64, dt: f64) {
    let mut new_speed = v.speed + accel * dt;
    let mut applied = accel;
    if new_speed < 0.0 {
        new_speed = 0.0;
        applied = -v.speed / dt;
    }
    v.s += 0.5 * (v.speed + new_speed) * dt;
    v.speed = new_speed;
    v.accel = applied;
}
