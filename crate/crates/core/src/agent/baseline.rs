use serde::{Deserialize, Serialize};

use super::{AgentError, AgentRequest, AgentResponse, Decision, DriverAgent};
use crate::perception::{Observation, Sector};
use crate::traffic::ttc_between;

/// Thresholds of the rule-based drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    /// Brake when the lead TTC falls below this, seconds.
    pub ttc_threshold: f64,
    /// Brake when the lead gap falls below this, metres.
    pub min_gap: f64,
    /// Free road ahead required before accelerating, metres.
    pub clear_distance: f64,
    /// Cruise target; `None` means the posted speed limit.
    pub target_speed: Option<f64>,
    /// Accelerate only when at least this far below the target.
    pub speed_margin: f64,
    /// Brake when this far above the target.
    pub overspeed_margin: f64,
    pub allow_lane_change: bool,
    /// Space needed behind the ego in the destination lane, metres.
    pub rear_clearance: f64,
    /// Share of the sensor visibility the ego must be able to stop within.
    /// Zero disables the sight-distance speed cap.
    pub sight_fraction: f64,
    /// Reaction time assumed by the sight-distance cap, seconds.
    pub reaction_time: f64,
    /// Braking deceleration assumed by the sight-distance cap, m/s^2.
    pub sight_decel: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            ttc_threshold: 4.0,
            min_gap: 0.0,
            clear_distance: 40.0,
            target_speed: None,
            speed_margin: 2.0,
            overspeed_margin: 0.5,
            allow_lane_change: true,
            rear_clearance: 15.0,
            sight_fraction: 0.5,
            reaction_time: 1.0,
            sight_decel: 3.0,
        }
    }
}

impl BaselineParams {
    /// Slow, long-headway driver that never changes lanes.
    pub fn cautious() -> Self {
        Self {
            ttc_threshold: 8.0,
            min_gap: 30.0,
            clear_distance: 60.0,
            target_speed: Some(7.0),
            speed_margin: 1.0,
            overspeed_margin: 0.5,
            allow_lane_change: false,
            ..Self::default()
        }
    }

    /// Fast driver that brakes late and ignores the speed limit.
    pub fn aggressive() -> Self {
        Self {
            ttc_threshold: 1.5,
            min_gap: 0.0,
            clear_distance: 0.0,
            target_speed: Some(20.0),
            speed_margin: 1.0,
            overspeed_margin: 2.0,
            allow_lane_change: false,
            sight_fraction: 0.0,
            ..Self::default()
        }
    }

    /// Highest speed from which the ego stops within `sight_fraction` of
    /// `visibility`, given the reaction time and braking deceleration.
    pub fn sight_speed(&self, visibility: f64) -> f64 {
        if !(self.sight_fraction > 0.0) || !(self.sight_decel > 0.0) {
            return f64::INFINITY;
        }
        // v * t + v^2 / (2 b) = d
        let d = self.sight_fraction * visibility.max(0.0);
        let (t, b) = (self.reaction_time.max(0.0), self.sight_decel);
        b * (-t + (t * t + 2.0 * d / b).sqrt())
    }
}

/// Rule-based decision for one observation.
///
/// The cruise target is capped by the sight-distance speed. In order: brake on low TTC or a short gap; brake when well over target;
/// below target, accelerate on a clear road or move to a clear adjacent lane
/// when boxed in; otherwise idle.
pub fn baseline_agent(obs: &Observation, params: &BaselineParams) -> Decision {
    let ego = &obs.ego;
    let target = params
        .target_speed
        .unwrap_or(obs.speed_limit)
        .min(params.sight_speed(obs.visibility_used));
    let lead = obs.lead();

    if let Some(lead) = lead {
        let ttc = ttc_between(lead.gap, ego.speed, ego.speed + lead.relative_speed);
        if ttc < params.ttc_threshold || lead.gap < params.min_gap {
            return Decision::Decelerate;
        }
    }
    if ego.speed > target + params.overspeed_margin {
        return Decision::Decelerate;
    }
    if ego.speed + params.speed_margin <= target {
        let front_gap = lead.map_or(f64::INFINITY, |d| d.gap);
        if front_gap >= params.clear_distance {
            return Decision::Accelerate;
        }
        if params.allow_lane_change && ego.lateral_offset == 0.0 {
            if ego.lane_index > 0 && lane_clear(obs, ego.lane_index - 1, params) {
                return Decision::TurnLeft;
            }
            if ego.lane_index + 1 < obs.lane_count && lane_clear(obs, ego.lane_index + 1, params) {
                return Decision::TurnRight;
            }
        }
    }
    Decision::Idle
}

fn lane_clear(obs: &Observation, lane: usize, params: &BaselineParams) -> bool {
    obs.in_lane(lane).all(|d| match d.sector {
        Sector::Front => d.gap >= params.clear_distance,
        Sector::Rear => d.gap >= params.rear_clearance,
    })
}

/// In-process driver applying [`baseline_agent`] with fixed thresholds.
#[derive(Debug, Clone, Default)]
pub struct RuleAgent {
    pub params: BaselineParams,
}

impl RuleAgent {
    pub fn new(params: BaselineParams) -> Self {
        Self { params }
    }
}

impl DriverAgent for RuleAgent {
    fn decide(&mut self, _req: &AgentRequest, obs: &Observation) -> Result<AgentResponse, AgentError> {
        let decision = baseline_agent(obs, &self.params);
        Ok(AgentResponse {
            decision,
            rationale: decision.render(),
            latency_ms: 0.0,
            fallback: None,
        })
    }
}
