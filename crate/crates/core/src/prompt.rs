//! Text rendering of an observation for language-model agents.
//!
//! Distances are printed to 0.1 m and speeds to 0.1 m/s so that prompts stay
//! stable and diff-able between runs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agent::Decision;
use crate::perception::{LidarSummary, Observation};

pub const LIDAR_HEADER: &str = "Lidar data description:";
pub const NO_VEHICLES: &str = "No vehicles detected within sensor range.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenePrompt {
    pub system_text: String,
    pub scene_text: String,
    pub task_text: String,
}

const SYSTEM_TEXT: &str = "You are the driving agent of an autonomous vehicle (the ego vehicle) on a \
multilane highway. Each turn you receive a structured description of the scene assembled from the \
vehicle's cameras and, when fitted, its semantic LiDAR. Drive safely first, then smoothly and \
efficiently, and stay within the speed limit.";

/// One decimal place, without a negative zero.
fn fmt1(x: f64) -> String {
    let r = (x * 10.0).round() / 10.0;
    if r == 0.0 {
        "0.0".to_string()
    } else {
        format!("{r:.1}")
    }
}

fn task_text() -> String {
    let options = Decision::ALL.map(|d| d.as_str()).join(", ");
    format!(
        "Decide what the ego vehicle does next. Choose exactly one of: {options}.\n\
         - idle: keep the current behaviour\n\
         - accelerate: speed up\n\
         - decelerate: slow down\n\
         - turn_left: change to the adjacent lane on the left\n\
         - turn_right: change to the adjacent lane on the right\n\
         Give a short justification, then write your choice on its own final line as \
         `DECISION: <value>`."
    )
}

fn lidar_block(summary: &LidarSummary) -> String {
    let mut out = format!("{LIDAR_HEADER}\n");
    match (summary.mean_distance, summary.min_distance, summary.max_distance) {
        (Some(mean), Some(min), Some(max)) => {
            let _ = write!(
                out,
                "num_points: {}, mean_distance: {} m, min_distance: {} m, max_distance: {} m",
                summary.num_points,
                fmt1(mean),
                fmt1(min),
                fmt1(max)
            );
        }
        _ => out.push_str("num_points: 0 (no returns within range)"),
    }
    out
}

/// Render `obs` as a three-part prompt. `remaining` is the distance left to
/// the route goal in metres.
pub fn render_prompt(obs: &Observation, remaining: f64) -> ScenePrompt {
    let ego = &obs.ego;
    let mut scene = String::new();
    let _ = writeln!(scene, "Weather: {}.", obs.weather_name);
    let _ = writeln!(
        scene,
        "Ego vehicle: lane {} of {} (lane 0 is the leftmost), speed {} m/s, speed limit {} m/s, \
         acceleration {} m/s^2.",
        ego.lane_index,
        obs.lane_count,
        fmt1(ego.speed),
        obs.speed_limit,
        fmt1(ego.accel)
    );
    let _ = writeln!(scene, "Route: {} m remaining to the goal.", fmt1(remaining.max(0.0)));
    let _ = writeln!(scene, "Sensor visibility: {} m.", fmt1(obs.visibility_used));
    if obs.detected.is_empty() {
        let _ = writeln!(scene, "Detected vehicles: none. {NO_VEHICLES}");
    } else {
        let _ = writeln!(scene, "Detected vehicles ({}):", obs.detected.len());
        for d in &obs.detected {
            let _ = writeln!(
                scene,
                "- {}, lane {}, gap {} m, relative speed {} m/s",
                d.sector.as_str(),
                d.lane_index,
                fmt1(d.gap),
                fmt1(d.relative_speed)
            );
        }
    }
    if let Some(lidar) = &obs.lidar {
        scene.push('\n');
        scene.push_str(&lidar_block(lidar));
        scene.push('\n');
    }

    ScenePrompt {
        system_text: SYSTEM_TEXT.to_string(),
        scene_text: scene,
        task_text: task_text(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{Detection, DetectionSource, Sector};
    use crate::traffic::VehicleState;
    use proptest::prelude::*;

    fn obs(detected: Vec<Detection>, lidar: Option<LidarSummary>) -> Observation {
        Observation {
            ego: VehicleState {
                id: 0,
                lane_index: 1,
                s: 50.0,
                lateral_offset: 0.0,
                speed: 12.34,
                accel: 0.0,
                length: 4.5,
                is_ego: true,
            },
            detected,
            visibility_used: 150.0,
            lidar,
            weather_name: "heavy_rain".into(),
            lane_count: 4,
            speed_limit: 13.89,
        }
    }

    fn det(lane: usize, gap: f64) -> Detection {
        Detection {
            vehicle_id: 1,
            sector: Sector::Front,
            lane_index: lane,
            gap,
            relative_speed: -2.0,
            source: DetectionSource::Camera,
        }
    }

    #[test]
    fn empty_scene_says_so() {
        let p = render_prompt(&obs(vec![], None), 100.0);
        assert!(p.scene_text.contains(NO_VEHICLES));
        assert!(!p.scene_text.contains(LIDAR_HEADER));
    }

    #[test]
    fn scene_mentions_required_facts() {
        let p = render_prompt(&obs(vec![det(2, 30.0)], None), 100.0);
        assert!(p.scene_text.contains("heavy_rain"));
        assert!(p.scene_text.contains("speed 12.3 m/s"));
        assert!(p.scene_text.contains("speed limit 13.89 m/s"));
        assert!(p.scene_text.contains("- front, lane 2, gap 30.0 m, relative speed -2.0 m/s"));
    }

    #[test]
    fn lidar_block_only_when_present() {
        let summary = LidarSummary {
            num_points: 2,
            mean_distance: Some(30.0),
            min_distance: Some(20.0),
            max_distance: Some(40.0),
        };
        let p = render_prompt(&obs(vec![], Some(summary)), 100.0);
        assert!(p.scene_text.contains(LIDAR_HEADER));
        assert!(p.scene_text.contains("num_points: 2, mean_distance: 30.0 m"));
    }

    #[test]
    fn task_lists_exactly_the_five_decisions() {
        let p = render_prompt(&obs(vec![], None), 0.0);
        for d in Decision::ALL {
            assert!(p.task_text.contains(d.as_str()));
        }
        assert!(p.task_text.contains("DECISION: <value>"));
    }

    #[test]
    fn deterministic() {
        let o = obs(vec![det(2, 30.0), det(1, 11.0)], None);
        assert_eq!(render_prompt(&o, 12.0), render_prompt(&o, 12.0));
    }

    #[test]
    fn no_negative_zero() {
        assert_eq!(fmt1(-0.04), "0.0");
        assert_eq!(fmt1(-0.06), "-0.1");
    }

    proptest! {
        #[test]
        fn distinct_lane_or_gap_gives_distinct_scene(
            lane in 0usize..4, gap in 0.0..150.0f64,
            other_lane in 0usize..4, delta in 0.11..50.0f64,
        ) {
            let base = render_prompt(&obs(vec![det(lane, gap)], None), 80.0);
            let moved = render_prompt(&obs(vec![det(lane, gap + delta)], None), 80.0);
            prop_assert_ne!(&base.scene_text, &moved.scene_text);
            if other_lane != lane {
                let shifted = render_prompt(&obs(vec![det(other_lane, gap)], None), 80.0);
                prop_assert_ne!(&base.scene_text, &shifted.scene_text);
            }
        }
    }
}
