//! Per-tick trajectory log, one JSON record per line.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::agent::Decision;
use crate::road::RoadNetwork;
use crate::scoring::Sample;
use crate::traffic::{ttc, WorldState};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoRecord {
    /// Lane coordinate: lane index plus the lateral offset in lane widths,
    /// so a lane change shows up as a continuous sweep.
    pub lane: f64,
    pub s: f64,
    pub speed: f64,
    pub accel: f64,
}

/// Infinite TTC (not closing on anything) is written as `null`.
mod ttc_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TickRecord {
    pub tick: u64,
    pub time: f64,
    pub ego: EgoRecord,
    #[serde(with = "ttc_null")]
    pub ttc: f64,
    /// NPCs within the sparse radius.
    pub npc_count: usize,
    /// Mean speed of those NPCs; `null` when there are none.
    pub avg_npc_speed: Option<f64>,
    pub sparse: bool,
    pub speeding: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
}

impl TickRecord {
    pub fn from_world(world: &WorldState, road: &RoadNetwork, sparse_radius: f64) -> Self {
        let ego = world.ego();
        let near: Vec<f64> = world
            .npcs()
            .filter(|v| (v.s - ego.s).abs() <= sparse_radius)
            .map(|v| v.speed)
            .collect();
        let avg = (!near.is_empty()).then(|| near.iter().sum::<f64>() / near.len() as f64);
        Self {
            tick: world.tick,
            time: world.time,
            ego: EgoRecord {
                lane: ego.lane_coordinate(road.lane_width()),
                s: ego.s,
                speed: ego.speed,
                accel: ego.accel,
            },
            ttc: ttc(world),
            npc_count: near.len(),
            avg_npc_speed: avg,
            sparse: near.is_empty(),
            speeding: ego.speed > road.speed_limit(),
            decision: None,
        }
    }

    /// Scoring inputs for this tick on `road`.
    pub fn sample(&self, road: &RoadNetwork) -> Sample {
        Sample {
            tick: self.tick,
            ttc: self.ttc,
            speed: self.ego.speed,
            lateral: self.ego.lane * road.lane_width(),
            curvature: road.curvature_at(self.ego.s),
            avg_npc_speed: self.avg_npc_speed,
            sparse: self.sparse,
        }
    }
}

pub fn write_log<W: Write>(records: &[TickRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Parse a log, failing on the first bad line (1-based).
pub fn parse_log<R: BufRead>(input: R) -> Result<Vec<TickRecord>, HarnessError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| HarnessError::Log {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TickRecord = serde_json::from_str(&line).map_err(|e| HarnessError::Log {
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(prev) = records.last().map(|r: &TickRecord| r.tick) {
            if rec.tick != prev + 1 {
                return Err(HarnessError::Log {
                    line: line_no,
                    message: format!("tick {} does not follow tick {prev}", rec.tick),
                });
            }
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(HarnessError::Log {
            line: 1,
            message: "log holds no records".to_string(),
        });
    }
    Ok(records)
}

pub fn samples(records: &[TickRecord], road: &RoadNetwork) -> Vec<Sample> {
    records.iter().map(|r| r.sample(road)).collect()
}
