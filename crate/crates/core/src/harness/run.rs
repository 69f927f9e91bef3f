//! The closed loop: observe, prompt, decide, act, step, and finally score.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracing::{debug, info, warn};

use super::config::RunConfig;
use super::log::{samples, TickRecord};
use super::HarnessError;
use crate::agent::{
    fingerprint, AgentError, AgentRequest, BaselineParams, Decision, DriverAgent, ExternalAgent,
    FallbackReason, MemoryCandidate, MemoryStore, RuleAgent, StreamTransport,
};
use crate::perception::observe;
use crate::prompt::render_prompt;
use crate::road::build_road;
use crate::scoring::{mean, score_samples, RunScores, ScoringError};
use crate::traffic::{apply_decision, spawn_traffic, EgoControl, EgoStart, Simulator};
use crate::weather::{WeatherConfig, WeatherEffects};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinAgent {
    Baseline,
    Cautious,
    Aggressive,
}

impl BuiltinAgent {
    pub fn params(self) -> BaselineParams {
        match self {
            BuiltinAgent::Baseline => BaselineParams::default(),
            BuiltinAgent::Cautious => BaselineParams::cautious(),
            BuiltinAgent::Aggressive => BaselineParams::aggressive(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentTarget {
    Builtin(BuiltinAgent),
    /// Shell command whose stdin/stdout carry the protocol.
    Proc(String),
    /// `host:port` of a listening agent.
    Tcp(String),
}

pub fn parse_target(target: &str) -> Result<AgentTarget, AgentError> {
    let bad = || AgentError::BadTarget(target.to_string());
    let (scheme, rest) = target.split_once(':').ok_or_else(bad)?;
    match scheme {
        "builtin" => match rest {
            "baseline" => Ok(AgentTarget::Builtin(BuiltinAgent::Baseline)),
            "cautious" => Ok(AgentTarget::Builtin(BuiltinAgent::Cautious)),
            "aggressive" => Ok(AgentTarget::Builtin(BuiltinAgent::Aggressive)),
            _ => Err(bad()),
        },
        "proc" if !rest.trim().is_empty() => Ok(AgentTarget::Proc(rest.to_string())),
        "tcp" if rest.contains(':') => Ok(AgentTarget::Tcp(rest.to_string())),
        _ => Err(bad()),
    }
}

/// Instantiate the agent named by the config.
pub fn connect_agent(cfg: &RunConfig) -> Result<Box<dyn DriverAgent>, AgentError> {
    let timeout = Duration::from_millis(cfg.agent.timeout_ms);
    Ok(match parse_target(&cfg.agent.target)? {
        AgentTarget::Builtin(b) => Box::new(RuleAgent::new(b.params())),
        AgentTarget::Proc(cmd) => Box::new(ExternalAgent::new(
            Box::new(StreamTransport::spawn(&cmd)?),
            timeout,
            cfg.agent.retries,
        )),
        AgentTarget::Tcp(addr) => Box::new(ExternalAgent::new(
            Box::new(StreamTransport::tcp(&addr)?),
            timeout,
            cfg.agent.retries,
        )),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GoalReached,
    Collision,
    Timeout,
    AgentFailure,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FallbackStats {
    pub decisions: u64,
    pub fallbacks: u64,
    pub rate: f64,
    pub timeout: u64,
    pub malformed_record: u64,
    pub no_decision: u64,
}

impl FallbackStats {
    fn record(&mut self, reason: Option<FallbackReason>) {
        self.decisions += 1;
        if let Some(r) = reason {
            self.fallbacks += 1;
            match r {
                FallbackReason::Timeout => self.timeout += 1,
                FallbackReason::MalformedRecord => self.malformed_record += 1,
                FallbackReason::NoDecision => self.no_decision += 1,
            }
        }
        self.rate = self.fallbacks as f64 / self.decisions as f64;
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub weather_name: String,
    pub weather: WeatherConfig,
    pub effects: WeatherEffects,
    pub termination: Termination,
    /// Why the agent channel gave up, for `AgentFailure`.
    pub failure: Option<String>,
    pub records: Vec<TickRecord>,
    pub scores: Result<RunScores, ScoringError>,
    pub memory: MemoryStore,
    pub fallback: FallbackStats,
}

/// A decision waiting for its window to close before it can be scored.
struct Pending {
    frame: u64,
    scene_fingerprint: String,
    decision: Decision,
    record_index: usize,
}

fn score_window(
    pending: Pending,
    end: usize,
    records: &[TickRecord],
    cfg: &RunConfig,
    road: &crate::road::RoadNetwork,
    memory: &mut MemoryStore,
) {
    // derivatives need three samples; widen short windows backwards
    let start = pending.record_index.min(end.saturating_sub(2));
    if end + 1 - start < 3 {
        debug!(frame = pending.frame, "window too short to score");
        return;
    }
    let window = samples(&records[start..=end], road);
    match score_samples(&window, cfg.scenario.dt, &cfg.scoring) {
        Ok(s) => {
            let min_ttc = records[start..=end].iter().map(|r| r.ttc).fold(f64::INFINITY, f64::min);
            let outcome = format!(
                "{} at frame {} scored {:.3}: safety {:.2}, comfort {:.2}, efficiency {:.2}, \
                 speeding frames {}, minimum TTC {}",
                pending.decision,
                pending.frame,
                s.aggregate,
                mean(&s.safety),
                mean(&s.comfort),
                mean(&s.efficiency),
                s.n_speeding,
                if min_ttc.is_finite() {
                    format!("{min_ttc:.1} s")
                } else {
                    "none".to_string()
                }
            );
            memory.update(MemoryCandidate {
                frame: pending.frame,
                scene_fingerprint: pending.scene_fingerprint,
                decision: pending.decision,
                frame_score: s.aggregate,
                outcome,
            });
        }
        Err(e) => warn!(frame = pending.frame, error = %e, "could not score decision window"),
    }
}

/// Drive one scenario to termination with `agent` in the loop.
pub fn run_scenario(cfg: &RunConfig, agent: &mut dyn DriverAgent) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let road = build_road(&sc.road)?;
    let (weather_name, weather) = sc.weather.resolve()?;
    let effects = sc.weather_model.effects(&weather);
    let control_params = cfg.effective_control();
    let sim = Simulator::new(road.clone(), sc.idm, control_params.lane_change_duration);
    let mut world = spawn_traffic(
        &road,
        &sc.traffic,
        EgoStart {
            lane: sc.ego_lane,
            s: sc.ego_start_s,
            speed: sc.ego_start_speed,
        },
        sc.seed,
    )?;
    let mut control = EgoControl::holding(sc.ego_lane);
    let mut memory = MemoryStore::new(cfg.agent.memory_threshold);
    let mut fallback = FallbackStats::default();
    let mut records: Vec<TickRecord> = Vec::new();
    let mut pending: Option<Pending> = None;
    let mut failure = None;
    let period = u64::from(sc.decision_period);

    let termination = loop {
        records.push(TickRecord::from_world(&world, &road, sc.sparse_radius));
        let idx = records.len() - 1;
        let ego = world.ego();
        let finished = if world.ego_collided() {
            Some(Termination::Collision)
        } else if ego.s >= sc.goal_s {
            Some(Termination::GoalReached)
        } else if world.tick >= sc.max_ticks {
            Some(Termination::Timeout)
        } else {
            None
        };
        if let Some(t) = finished {
            if let Some(p) = pending.take() {
                score_window(p, idx, &records, cfg, &road, &mut memory);
            }
            break t;
        }

        if world.tick % period == 0 {
            if let Some(p) = pending.take() {
                score_window(p, idx, &records, cfg, &road, &mut memory);
            }
            let obs = observe(&world, &road, &sc.rig, &effects, &weather_name, sc.seed);
            let prompt = render_prompt(&obs, sc.goal_s - ego.s);
            let scene_fingerprint = fingerprint(&prompt.scene_text);
            let req = AgentRequest {
                frame: world.tick,
                prompt,
                lidar: obs.lidar.clone(),
                history: memory.history(cfg.agent.history_len),
            };
            let resp = match agent.decide(&req, &obs) {
                Ok(r) => r,
                Err(e) => {
                    warn!(tick = world.tick, error = %e, "agent channel failed, aborting run");
                    failure = Some(e.to_string());
                    break Termination::AgentFailure;
                }
            };
            fallback.record(resp.fallback);
            debug!(tick = world.tick, decision = %resp.decision, "decision");
            records[idx].decision = Some(resp.decision);
            control = apply_decision(resp.decision, ego, &road, &control, &control_params);
            pending = Some(Pending {
                frame: world.tick,
                scene_fingerprint,
                decision: resp.decision,
                record_index: idx,
            });
        }

        let (next, next_control) = sim.step(&world, &control, effects.friction, sc.dt);
        world = next;
        control = next_control;
    };

    let scores = score_samples(&samples(&records, &road), sc.dt, &cfg.scoring);
    info!(
        ?termination,
        ticks = records.len(),
        aggregate = scores.as_ref().map(|s| s.aggregate).ok(),
        "run finished"
    );
    Ok(RunOutcome {
        config: cfg.clone(),
        weather_name,
        weather,
        effects,
        termination,
        failure,
        records,
        scores,
        memory,
        fallback,
    })
}

/// Run with the agent named in the config.
pub fn run_config(cfg: &RunConfig) -> Result<RunOutcome, HarnessError> {
    cfg.validate()?;
    let mut agent = connect_agent(cfg)?;
    run_scenario(cfg, agent.as_mut())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::TrafficSpec;

    fn quiet_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.scenario.traffic = TrafficSpec {
            n_vehicles: 0,
            ..TrafficSpec::default()
        };
        cfg
    }

    #[test]
    fn targets_parse() {
        assert_eq!(parse_target("builtin:baseline").unwrap(), AgentTarget::Builtin(BuiltinAgent::Baseline));
        assert_eq!(parse_target("proc:python3 agent.py").unwrap(), AgentTarget::Proc("python3 agent.py".into()));
        assert_eq!(parse_target("tcp:127.0.0.1:9000").unwrap(), AgentTarget::Tcp("127.0.0.1:9000".into()));
        for bad in ["baseline", "builtin:gpt", "proc:", "tcp:nohost", "ftp:x"] {
            assert!(parse_target(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_road_reaches_goal_safely() {
        let out = run_config(&quiet_config()).unwrap();
        assert_eq!(out.termination, Termination::GoalReached);
        let scores = out.scores.unwrap();
        assert_eq!(mean(&scores.safety), 1.0);
        assert_eq!(out.fallback.fallbacks, 0);
    }

    #[test]
    fn decisions_sit_on_decision_ticks_only() {
        let out = run_config(&RunConfig::default()).unwrap();
        let last = out.records.len() - 1;
        for (i, r) in out.records.iter().enumerate() {
            let expected = r.tick % 10 == 0 && i != last;
            assert_eq!(r.decision.is_some(), expected, "tick {}", r.tick);
        }
        assert_eq!(out.fallback.decisions as usize, out.records.iter().filter(|r| r.decision.is_some()).count());
    }

    #[test]
    fn memory_gets_one_entry_per_scored_decision() {
        let out = run_config(&RunConfig::default()).unwrap();
        assert_eq!(out.memory.len() as u64, out.fallback.decisions);
        let frames: Vec<u64> = out.memory.entries().iter().map(|e| e.frame).collect();
        assert!(frames.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn history_is_fed_forward() {
        struct Spy(Vec<usize>);
        impl DriverAgent for Spy {
            fn decide(
                &mut self,
                req: &AgentRequest,
                _obs: &crate::perception::Observation,
            ) -> Result<crate::agent::AgentResponse, AgentError> {
                self.0.push(req.history.len());
                Ok(crate::agent::AgentResponse {
                    decision: Decision::Accelerate,
                    rationale: String::new(),
                    latency_ms: 0.0,
                    fallback: None,
                })
            }
        }
        let mut spy = Spy(vec![]);
        run_scenario(&quiet_config(), &mut spy).unwrap();
        assert_eq!(spy.0[0], 0);
        assert_eq!(spy.0[1], 1);
        assert!(spy.0.iter().all(|&k| k <= 8));
        assert_eq!(*spy.0.last().unwrap(), 8);
    }

    #[test]
    fn transport_failure_keeps_a_scored_partial_log() {
        struct Broken(u32);
        impl DriverAgent for Broken {
            fn decide(
                &mut self,
                _req: &AgentRequest,
                _obs: &crate::perception::Observation,
            ) -> Result<crate::agent::AgentResponse, AgentError> {
                self.0 += 1;
                if self.0 > 3 {
                    return Err(AgentError::Transport(std::io::Error::other("gone")));
                }
                Ok(crate::agent::AgentResponse {
                    decision: Decision::Idle,
                    rationale: String::new(),
                    latency_ms: 0.0,
                    fallback: None,
                })
            }
        }
        let out = run_scenario(&RunConfig::default(), &mut Broken(0)).unwrap();
        assert_eq!(out.termination, Termination::AgentFailure);
        assert_eq!(out.records.len(), 31);
        assert!(out.scores.is_ok());
        assert!(out.failure.unwrap().contains("gone"));
    }
}
