use serde::{Deserialize, Serialize};

/// Intelligent Driver Model parameters for NPC car following.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    pub time_headway: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
    /// Standstill bumper gap.
    pub min_gap: f64,
    pub exponent: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            time_headway: 1.5,
            max_accel: 1.5,
            comfortable_decel: 2.0,
            min_gap: 2.0,
            exponent: 4.0,
        }
    }
}

impl IdmParams {
    /// IDM acceleration. `lead` is `(bumper gap, leader speed)`.
    pub fn accel(&self, speed: f64, desired_speed: f64, lead: Option<(f64, f64)>) -> f64 {
        let free = self.max_accel * (1.0 - (speed / desired_speed).powf(self.exponent));
        let Some((gap, lead_speed)) = lead else {
            return free;
        };
        if gap <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let approach = speed - lead_speed;
        let dynamic = speed * self.time_headway
            + speed * approach / (2.0 * (self.max_accel * self.comfortable_decel).sqrt());
        let desired_gap = self.min_gap + dynamic.max(0.0);
        free - self.max_accel * (desired_gap / gap).powi(2)
    }
}
