//! Per-frame safety, comfort and efficiency scores, the run-level speed
//! penalty, their CDFs and the weighted aggregate.

mod cdf;
mod kinematics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cdf::{build_cdf, Cdf, CdfPoint};
pub use kinematics::{first_difference, kinematic_derivatives, second_difference, Kinematics};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScoringError {
    #[error("need at least 3 samples for derivatives, got {0}")]
    SeriesTooShort(usize),
    #[error("input series have different lengths")]
    LengthMismatch,
    #[error("cannot build a CDF from no samples")]
    EmptySamples,
    #[error("speed score needs at least one frame")]
    NoFrames,
    #[error("invalid scoring parameter: {0}")]
    InvalidParam(&'static str),
}

/// Reference magnitudes for the comfort sub-scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefSet {
    pub acc: f64,
    pub jerk: f64,
    pub lat_acc: f64,
    pub lat_jerk: f64,
}

impl RefSet {
    fn scaled(self, k: f64) -> Self {
        Self {
            acc: self.acc * k,
            jerk: self.jerk * k,
            lat_acc: self.lat_acc * k,
            lat_jerk: self.lat_jerk * k,
        }
    }

    fn valid(&self) -> bool {
        [self.acc, self.jerk, self.lat_acc, self.lat_jerk]
            .iter()
            .all(|&r| r > 0.0 && r.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrivingStyle {
    Cautious,
    Normal,
    Aggressive,
}

impl fmt::Display for DrivingStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DrivingStyle::Cautious => "cautious",
            DrivingStyle::Normal => "normal",
            DrivingStyle::Aggressive => "aggressive",
        })
    }
}

impl FromStr for DrivingStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cautious" => Ok(DrivingStyle::Cautious),
            "normal" => Ok(DrivingStyle::Normal),
            "aggressive" => Ok(DrivingStyle::Aggressive),
            other => Err(format!("unknown driving style `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComfortRefs {
    pub cautious: RefSet,
    pub normal: RefSet,
    pub aggressive: RefSet,
}

impl Default for ComfortRefs {
    fn default() -> Self {
        let normal = RefSet {
            acc: 2.0,
            jerk: 2.0,
            lat_acc: 1.5,
            lat_jerk: 1.5,
        };
        Self {
            cautious: normal.scaled(0.5),
            normal,
            aggressive: normal.scaled(2.0),
        }
    }
}

impl ComfortRefs {
    pub fn for_style(&self, style: DrivingStyle) -> &RefSet {
        match style {
            DrivingStyle::Cautious => &self.cautious,
            DrivingStyle::Normal => &self.normal,
            DrivingStyle::Aggressive => &self.aggressive,
        }
    }
}

/// Every knob that changes a score. Embedded verbatim in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringParams {
    /// TTC threshold, seconds.
    pub tau_th: f64,
    pub style: DrivingStyle,
    /// Weights of comfort, efficiency and safety in the aggregate.
    pub alpha: [f64; 3],
    pub v_limit: f64,
    pub refs: ComfortRefs,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            tau_th: 4.0,
            style: DrivingStyle::Normal,
            alpha: [0.25, 0.25, 0.5],
            v_limit: crate::road::DEFAULT_SPEED_LIMIT,
            refs: ComfortRefs::default(),
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if !(self.tau_th > 0.0) {
            return Err(ScoringError::InvalidParam("tau_th must be positive"));
        }
        if !(self.v_limit > 0.0) {
            return Err(ScoringError::InvalidParam("v_limit must be positive"));
        }
        if self.alpha.iter().any(|&a| !(a >= 0.0)) || (self.alpha.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ScoringError::InvalidParam("alpha weights must be non-negative and sum to 1"));
        }
        for set in [&self.refs.cautious, &self.refs.normal, &self.refs.aggressive] {
            if !set.valid() {
                return Err(ScoringError::InvalidParam("comfort references must be positive"));
            }
        }
        Ok(())
    }
}

/// 1 at or above the TTC threshold, linear below it.
pub fn safety_score(tau_e: f64, tau_th: f64) -> f64 {
    if tau_e >= tau_th {
        1.0
    } else {
        (tau_e / tau_th).max(0.0)
    }
}

fn sub_score(x: f64, reference: f64) -> f64 {
    let mag = x.abs();
    if mag <= reference {
        1.0
    } else {
        reference / mag
    }
}

/// Mean of the four comfort sub-scores `min(1, ref/|x|)`.
pub fn comfort_score(frame: &FrameRecord, refs: &ComfortRefs, style: DrivingStyle) -> f64 {
    let r = refs.for_style(style);
    (sub_score(frame.accel, r.acc)
        + sub_score(frame.jerk, r.jerk)
        + sub_score(frame.lat_accel, r.lat_acc)
        + sub_score(frame.lat_jerk, r.lat_jerk))
        / 4.0
}

/// 1 at or above the target speed, linear below it. A non-positive target
/// (stopped traffic) cannot be under-run and scores 1.
pub fn efficiency_score(v_e: f64, v_star: f64) -> f64 {
    if v_e >= v_star || !(v_star > 0.0) {
        1.0
    } else {
        (v_e / v_star).max(0.0)
    }
}

/// Efficiency target: the speed limit on a sparse road, otherwise the
/// surrounding traffic's average speed capped at the limit.
pub fn target_speed(avg_npc_speed: Option<f64>, sparse: bool, v_limit: f64) -> f64 {
    match avg_npc_speed {
        Some(v_avg) if !sparse => v_avg.min(v_limit),
        _ => v_limit,
    }
}

/// `0.9^(10 * speeding fraction)`.
pub fn speed_score(n_speeding: usize, n_total: usize) -> Result<f64, ScoringError> {
    if n_total == 0 {
        return Err(ScoringError::NoFrames);
    }
    if n_speeding > n_total {
        return Err(ScoringError::InvalidParam("more speeding frames than frames"));
    }
    Ok(0.9f64.powf(10.0 * n_speeding as f64 / n_total as f64))
}

/// What the log records about one tick, before differentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub tick: u64,
    pub ttc: f64,
    pub speed: f64,
    /// Lateral position across the road, metres.
    pub lateral: f64,
    /// Road curvature under the ego.
    pub curvature: f64,
    pub avg_npc_speed: Option<f64>,
    pub sparse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub tick: u64,
    pub ttc: f64,
    pub speed: f64,
    pub avg_npc_speed: Option<f64>,
    pub sparse: bool,
    pub accel: f64,
    pub jerk: f64,
    pub lat_accel: f64,
    pub lat_jerk: f64,
    pub speeding: bool,
}

/// Differentiate the sampled series into frame records.
pub fn build_frames(samples: &[Sample], dt: f64, v_limit: f64) -> Result<Vec<FrameRecord>, ScoringError> {
    let speed: Vec<f64> = samples.iter().map(|s| s.speed).collect();
    let lateral: Vec<f64> = samples.iter().map(|s| s.lateral).collect();
    let curvature: Vec<f64> = samples.iter().map(|s| s.curvature).collect();
    let k = kinematic_derivatives(&speed, &lateral, &curvature, dt)?;
    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, s)| FrameRecord {
            tick: s.tick,
            ttc: s.ttc,
            speed: s.speed,
            avg_npc_speed: s.avg_npc_speed,
            sparse: s.sparse,
            accel: k.accel[i],
            jerk: k.jerk[i],
            lat_accel: k.lat_accel[i],
            lat_jerk: k.lat_jerk[i],
            speeding: s.speed > v_limit,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCdfs {
    pub safety: Cdf,
    pub comfort: Cdf,
    pub efficiency: Cdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub safety: Vec<f64>,
    pub comfort: Vec<f64>,
    pub efficiency: Vec<f64>,
    pub n_frames: usize,
    pub n_speeding: usize,
    pub speed_score: f64,
    pub cdfs: MetricCdfs,
    pub weights: [f64; 3],
    pub aggregate: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Weighted mean of the per-frame score means, times the speed penalty.
pub fn aggregate(run: &RunScores) -> f64 {
    let [a_comfort, a_eff, a_safety] = run.weights;
    (a_comfort * mean(&run.comfort) + a_eff * mean(&run.efficiency) + a_safety * mean(&run.safety))
        * run.speed_score
}

pub fn score_frames(frames: &[FrameRecord], params: &ScoringParams) -> Result<RunScores, ScoringError> {
    params.validate()?;
    if frames.is_empty() {
        return Err(ScoringError::NoFrames);
    }
    let safety: Vec<f64> = frames.iter().map(|f| safety_score(f.ttc, params.tau_th)).collect();
    let comfort: Vec<f64> = frames
        .iter()
        .map(|f| comfort_score(f, &params.refs, params.style))
        .collect();
    let efficiency: Vec<f64> = frames
        .iter()
        .map(|f| efficiency_score(f.speed, target_speed(f.avg_npc_speed, f.sparse, params.v_limit)))
        .collect();
    let n_speeding = frames.iter().filter(|f| f.speed > params.v_limit).count();
    let speed = speed_score(n_speeding, frames.len())?;
    let cdfs = MetricCdfs {
        safety: build_cdf(&safety)?,
        comfort: build_cdf(&comfort)?,
        efficiency: build_cdf(&efficiency)?,
    };
    let mut run = RunScores {
        safety,
        comfort,
        efficiency,
        n_frames: frames.len(),
        n_speeding,
        speed_score: speed,
        cdfs,
        weights: params.alpha,
        aggregate: 0.0,
    };
    run.aggregate = aggregate(&run);
    Ok(run)
}

pub fn score_samples(samples: &[Sample], dt: f64, params: &ScoringParams) -> Result<RunScores, ScoringError> {
    score_frames(&build_frames(samples, dt, params.v_limit)?, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(accel: f64, jerk: f64, lat_accel: f64, lat_jerk: f64) -> FrameRecord {
        FrameRecord {
            tick: 0,
            ttc: f64::INFINITY,
            speed: 10.0,
            avg_npc_speed: None,
            sparse: true,
            accel,
            jerk,
            lat_accel,
            lat_jerk,
            speeding: false,
        }
    }

    fn run_with_means(c: f64, e: f64, s: f64, speed_score: f64) -> RunScores {
        let cdf = build_cdf(&[1.0]).unwrap();
        RunScores {
            safety: vec![s],
            comfort: vec![c],
            efficiency: vec![e],
            n_frames: 1,
            n_speeding: 0,
            speed_score,
            cdfs: MetricCdfs {
                safety: cdf.clone(),
                comfort: cdf.clone(),
                efficiency: cdf,
            },
            weights: [0.25, 0.25, 0.5],
            aggregate: 0.0,
        }
    }

    #[test]
    fn safety_examples() {
        assert_eq!(safety_score(f64::INFINITY, 4.0), 1.0);
        assert_eq!(safety_score(2.0, 4.0), 0.5);
        assert_eq!(safety_score(0.0, 4.0), 0.0);
        assert_eq!(safety_score(4.0, 4.0), 1.0);
    }

    #[test]
    fn comfort_examples() {
        let refs = ComfortRefs::default();
        assert_eq!(comfort_score(&frame(1.0, 1.0, 1.0, 1.0), &refs, DrivingStyle::Normal), 1.0);
        let two_zero = frame(0.0, 0.0, f64::INFINITY, f64::INFINITY);
        assert_eq!(comfort_score(&two_zero, &refs, DrivingStyle::Normal), 0.5);
        // acc_ref 1.0 is the cautious acc reference
        assert_eq!(refs.cautious.acc, 1.0);
        let f = frame(2.0, 0.0, 0.0, 0.0);
        assert_eq!(comfort_score(&f, &refs, DrivingStyle::Cautious), 0.875);
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(efficiency_score(20.0, 13.89), 1.0);
        assert!((efficiency_score(6.945, 13.89) - 0.5).abs() < 1e-15);
        assert_eq!(efficiency_score(0.0, 13.89), 0.0);
        assert_eq!(efficiency_score(0.0, 0.0), 1.0);
    }

    #[test]
    fn target_speed_examples() {
        assert_eq!(target_speed(None, true, 13.89), 13.89);
        assert_eq!(target_speed(Some(5.0), true, 13.89), 13.89);
        assert_eq!(target_speed(Some(10.0), false, 13.89), 10.0);
        assert_eq!(target_speed(Some(16.0), false, 13.89), 13.89);
    }

    #[test]
    fn speed_score_examples() {
        assert_eq!(speed_score(0, 50).unwrap(), 1.0);
        assert!((speed_score(50, 50).unwrap() - 0.3486784401).abs() < 1e-12);
        assert!((speed_score(5, 50).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(speed_score(0, 0), Err(ScoringError::NoFrames));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&run_with_means(1.0, 1.0, 1.0, 1.0)), 1.0);
        assert!((aggregate(&run_with_means(0.8, 0.6, 1.0, 1.0)) - 0.85).abs() < 1e-12);
        let sp = speed_score(10, 10).unwrap();
        assert!((aggregate(&run_with_means(1.0, 1.0, 1.0, sp)) - 0.3486784401).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(ScoringParams::default().validate().is_ok());
        let bad = ScoringParams {
            alpha: [0.5, 0.5, 0.5],
            ..ScoringParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
