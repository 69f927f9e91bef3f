//! Side-by-side comparison of run reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::report::{Stat, Summary};
use super::HarnessError;
use crate::scoring::{Cdf, RunScores};

pub const METRICS: [&str; 3] = ["safety", "comfort", "efficiency"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub safety: Stat,
    pub comfort: Stat,
    pub efficiency: Stat,
    pub speed_score: f64,
    pub aggregate: f64,
}

/// `dominance[m][i][j]` is the fraction of sample points at which run `i`'s
/// CDF of metric `m` lies strictly below run `j`'s, i.e. where run `i` has
/// more of its mass at higher scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metrics: Vec<String>,
    pub rows: Vec<CompareRow>,
    pub dominance: Vec<Vec<Vec<f64>>>,
}

fn metric_cdf(s: &RunScores, metric: usize) -> &Cdf {
    match metric {
        0 => &s.cdfs.safety,
        1 => &s.cdfs.comfort,
        _ => &s.cdfs.efficiency,
    }
}

/// Fraction of the union of both supports where `a` lies strictly below `b`.
pub fn dominance(a: &Cdf, b: &Cdf) -> f64 {
    let mut xs: Vec<f64> = a.points().iter().chain(b.points()).map(|p| p.value).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let below = xs.iter().filter(|&&x| a.eval(x) < b.eval(x)).count();
    below as f64 / xs.len() as f64
}

pub fn compare(runs: &[(String, &RunScores)]) -> Result<Comparison, HarnessError> {
    if runs.len() < 2 {
        return Err(HarnessError::Compare(format!(
            "need at least two reports, got {}",
            runs.len()
        )));
    }
    let rows = runs
        .iter()
        .map(|(label, s)| {
            let sum = Summary::of(s);
            CompareRow {
                label: label.clone(),
                safety: sum.safety,
                comfort: sum.comfort,
                efficiency: sum.efficiency,
                speed_score: sum.speed_score,
                aggregate: sum.aggregate,
            }
        })
        .collect();
    let dominance = (0..METRICS.len())
        .map(|m| {
            runs.iter()
                .map(|(_, a)| {
                    runs.iter()
                        .map(|(_, b)| dominance(metric_cdf(a, m), metric_cdf(b, m)))
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(Comparison {
        metrics: METRICS.iter().map(|m| m.to_string()).collect(),
        rows,
        dominance,
    })
}

impl Comparison {
    /// Plain-text tables: summary statistics, then one dominance matrix per
    /// metric.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9} {:>9}  {:>9} {:>9}  {:>9} {:>9}  {:>7}  {:>9}",
            "run", "safety", "(median)", "comfort", "(median)", "effic.", "(median)", "speed", "aggregate"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4} {:>9.4}  {:>9.4} {:>9.4}  {:>9.4} {:>9.4}  {:>7.4}  {:>9.4}",
                r.label,
                r.safety.mean,
                r.safety.median,
                r.comfort.mean,
                r.comfort.median,
                r.efficiency.mean,
                r.efficiency.median,
                r.speed_score,
                r.aggregate
            );
        }
        for (m, matrix) in self.metrics.iter().zip(&self.dominance) {
            let _ = writeln!(out, "\n{m} CDF dominance (row below column):");
            let _ = write!(out, "{:<width$}", "");
            for j in 0..self.rows.len() {
                let _ = write!(out, " {:>6}", format!("[{j}]"));
            }
            out.push('\n');
            for (i, row) in matrix.iter().enumerate() {
                let _ = write!(out, "{:<width$}", format!("[{i}] {}", self.rows[i].label));
                for v in row {
                    let _ = write!(out, " {v:>6.3}");
                }
                out.push('\n');
            }
        }
        out
    }
}
