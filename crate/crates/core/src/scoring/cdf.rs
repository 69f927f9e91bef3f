use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::ScoringError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    pub fraction: f64,
}

/// Empirical CDF as a step table over the distinct sample values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cdf {
    points: Vec<CdfPoint>,
}

pub fn build_cdf(samples: &[f64]) -> Result<Cdf, ScoringError> {
    if samples.is_empty() {
        return Err(ScoringError::EmptySamples);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(ScoringError::InvalidParam("NaN sample"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mut points: Vec<CdfPoint> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        let fraction = (i + 1) as f64 / n as f64;
        match points.last_mut() {
            Some(p) if p.value == x => p.fraction = fraction,
            _ => points.push(CdfPoint { value: x, fraction }),
        }
    }
    Ok(Cdf { points })
}

impl Cdf {
    pub fn points(&self) -> &[CdfPoint] {
        &self.points
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.points.partition_point(|p| p.value <= x) {
            0 => 0.0,
            i => self.points[i - 1].fraction,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "value,fraction")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.value, p.fraction)?;
        }
        Ok(())
    }
}
