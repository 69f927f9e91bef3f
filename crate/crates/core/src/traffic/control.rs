use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use tracing::warn;

use super::VehicleState;
use crate::agent::Decision;
use crate::road::RoadNetwork;

/// Mapping from decisions to longitudinal and lateral commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    pub accelerate: f64,
    pub decelerate: f64,
    /// Duration of a lane change, seconds.
    pub lane_change_duration: f64,
    /// How many ticks an accelerate/decelerate command stays applied before
    /// the ego returns to cruising. `None` keeps it until the next command.
    pub accel_pulse_ticks: Option<u32>,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            accelerate: 2.0,
            decelerate: -3.0,
            lane_change_duration: 3.0,
            accel_pulse_ticks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoControl {
    pub commanded_accel: f64,
    pub target_lane: usize,
    /// Fraction of the current lane change completed; 1.0 when none is active.
    pub lane_change_progress: f64,
    pub origin_lane: usize,
    pub pulse_ticks_remaining: Option<u32>,
}

impl EgoControl {
    /// Cruise in `lane` with no acceleration.
    pub fn holding(lane: usize) -> Self {
        Self {
            commanded_accel: 0.0,
            target_lane: lane,
            lane_change_progress: 1.0,
            origin_lane: lane,
            pulse_ticks_remaining: None,
        }
    }

    pub fn is_changing_lane(&self) -> bool {
        self.lane_change_progress < 1.0
    }

    /// Move the ego along its lateral profile for one tick and count down any
    /// acceleration pulse. Returns the control for the next tick.
    pub(crate) fn advance_lateral(
        &self,
        ego: &mut VehicleState,
        lane_width: f64,
        duration: f64,
        dt: f64,
    ) -> EgoControl {
        let mut next = self.clone();
        if let Some(left) = next.pulse_ticks_remaining {
            let left = left.saturating_sub(1);
            next.pulse_ticks_remaining = Some(left);
            if left == 0 {
                next.commanded_accel = 0.0;
                next.pulse_ticks_remaining = None;
            }
        }
        if !self.is_changing_lane() {
            return next;
        }

        let mut progress = self.lane_change_progress + dt / duration;
        // absorb accumulated rounding so the maneuver ends on the expected tick
        if progress > 1.0 - 1e-9 {
            progress = 1.0;
        }
        let dir = if self.target_lane > self.origin_lane { 1.0 } else { -1.0 };
        // sinusoidal lateral profile from origin centre to target centre
        let shift = lane_width * (1.0 - (PI * progress).cos()) / 2.0;
        if progress >= 1.0 {
            ego.lane_index = self.target_lane;
            ego.lateral_offset = 0.0;
            next.origin_lane = self.target_lane;
        } else if progress >= 0.5 {
            ego.lane_index = self.target_lane;
            ego.lateral_offset = dir * (shift - lane_width);
        } else {
            ego.lane_index = self.origin_lane;
            ego.lateral_offset = dir * shift;
        }
        next.lane_change_progress = progress;
        next
    }
}

/// Translate a decision into the ego's control for the coming ticks.
///
/// Lane changes toward a non-existent lane, or requested while another lane
/// change is still running, degrade to `Idle` and log a warning.
pub fn apply_decision(
    decision: Decision,
    ego: &VehicleState,
    road: &RoadNetwork,
    current: &EgoControl,
    params: &ControlParams,
) -> EgoControl {
    let longitudinal = |accel: f64| EgoControl {
        commanded_accel: accel,
        pulse_ticks_remaining: params.accel_pulse_ticks.filter(|&t| t > 0),
        ..current.clone()
    };
    match decision {
        Decision::Idle => current.clone(),
        Decision::Accelerate => longitudinal(params.accelerate),
        Decision::Decelerate => longitudinal(params.decelerate),
        Decision::TurnLeft | Decision::TurnRight => {
            if current.is_changing_lane() {
                warn!(%decision, "lane change already in progress, holding");
                return current.clone();
            }
            let target = match decision {
                Decision::TurnLeft => ego.lane_index.checked_sub(1),
                _ => Some(ego.lane_index + 1).filter(|&l| l < road.lane_count()),
            };
            let Some(target) = target else {
                warn!(%decision, lane = ego.lane_index, "no lane on that side, holding");
                return current.clone();
            };
            EgoControl {
                commanded_accel: 0.0,
                target_lane: target,
                lane_change_progress: 0.0,
                origin_lane: ego.lane_index,
                pulse_ticks_remaining: None,
            }
        }
    }
}
