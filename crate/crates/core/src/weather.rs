//! Weather vector, named presets and their operational consequences.
//!
//! `cloudiness`, `wind_intensity` and `sun_altitude_angle` are carried and
//! logged but are inert: none of them enters [`WeatherModel::effects`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, PartialEq)]
pub enum WeatherError {
    #[error("unknown weather preset `{0}` (expected heavy_rain, storm, fog, wetness or good)")]
    UnknownPreset(String),
    #[error("weather field `{field}` = {value} is out of range")]
    OutOfRange { field: &'static str, value: f64 },
}

/// The eight-parameter weather vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherConfig {
    pub cloudiness: f64,
    pub precipitation: f64,
    pub precipitation_deposits: f64,
    pub wind_intensity: f64,
    pub sun_altitude_angle: f64,
    pub fog_density: f64,
    pub fog_distance: f64,
    pub wetness: f64,
}

impl WeatherConfig {
    pub fn validate(&self) -> Result<(), WeatherError> {
        let pct = [
            ("cloudiness", self.cloudiness),
            ("precipitation", self.precipitation),
            ("precipitation_deposits", self.precipitation_deposits),
            ("wind_intensity", self.wind_intensity),
            ("fog_density", self.fog_density),
            ("wetness", self.wetness),
        ];
        for (field, value) in pct {
            if !(0.0..=100.0).contains(&value) {
                return Err(WeatherError::OutOfRange { field, value });
            }
        }
        if !(self.fog_distance >= 0.0) || !self.fog_distance.is_finite() {
            return Err(WeatherError::OutOfRange {
                field: "fog_distance",
                value: self.fog_distance,
            });
        }
        if !(-90.0..=90.0).contains(&self.sun_altitude_angle) {
            return Err(WeatherError::OutOfRange {
                field: "sun_altitude_angle",
                value: self.sun_altitude_angle,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    HeavyRain,
    Storm,
    Fog,
    Wetness,
    Good,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::HeavyRain,
        Preset::Storm,
        Preset::Fog,
        Preset::Wetness,
        Preset::Good,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HeavyRain => "heavy_rain",
            Preset::Storm => "storm",
            Preset::Fog => "fog",
            Preset::Wetness => "wetness",
            Preset::Good => "good",
        }
    }

    pub fn config(self) -> WeatherConfig {
        let v = match self {
            Preset::HeavyRain => [80.0, 70.0, 60.0, 30.0, 45.0, 10.0, 10.0, 80.0],
            Preset::Storm => [80.0, 100.0, 100.0, 100.0, 20.0, 20.0, 10.0, 80.0],
            Preset::Fog => [40.0, 5.0, 5.0, 10.0, 60.0, 70.0, 3.0, 10.0],
            Preset::Wetness => [30.0, 0.0, 0.0, 0.0, 70.0, 0.0, 0.0, 100.0],
            Preset::Good => [0.0, 0.0, 0.0, 0.0, 60.0, 0.0, 20.0, 0.0],
        };
        WeatherConfig {
            cloudiness: v[0],
            precipitation: v[1],
            precipitation_deposits: v[2],
            wind_intensity: v[3],
            sun_altitude_angle: v[4],
            fog_density: v[5],
            fog_distance: v[6],
            wetness: v[7],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = WeatherError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| WeatherError::UnknownPreset(s.to_string()))
    }
}

/// Look up a preset vector by name.
pub fn preset(name: &str) -> Result<WeatherConfig, WeatherError> {
    name.parse::<Preset>().map(Preset::config)
}

/// Operational consequences of a weather vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherEffects {
    pub camera_visibility: f64,
    pub lidar_visibility: f64,
    pub detection_dropout: f64,
    pub position_noise_sigma: f64,
    pub friction: f64,
}

impl WeatherEffects {
    /// Largest deceleration (and acceleration) magnitude the tyres can carry.
    pub fn max_braking(&self) -> f64 {
        max_braking(self)
    }
}

pub fn max_braking(effects: &WeatherEffects) -> f64 {
    effects.friction * GRAVITY
}

/// Coefficients of the degradation model. Placeholders chosen so the five
/// presets land on clearly separated effect vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatherModel {
    pub camera_clear_range: f64,
    pub camera_rain_loss: f64,
    pub lidar_clear_range: f64,
    pub lidar_fog_loss: f64,
    pub dropout_per_precip: f64,
    pub noise_scale: f64,
    pub friction_wetness_loss: f64,
    pub friction_deposit_loss: f64,
    pub friction_floor: f64,
}

impl Default for WeatherModel {
    fn default() -> Self {
        Self {
            camera_clear_range: 150.0,
            camera_rain_loss: 0.3,
            lidar_clear_range: 100.0,
            lidar_fog_loss: 0.3,
            dropout_per_precip: 0.2,
            noise_scale: 0.5,
            friction_wetness_loss: 0.4,
            friction_deposit_loss: 0.1,
            friction_floor: 0.3,
        }
    }
}

impl WeatherModel {
    pub fn effects(&self, cfg: &WeatherConfig) -> WeatherEffects {
        let fog = cfg.fog_density / 100.0;
        let precip = cfg.precipitation / 100.0;
        let camera = self.camera_clear_range * (1.0 - fog) * (1.0 - self.camera_rain_loss * precip);
        let friction = 1.0
            - self.friction_wetness_loss * cfg.wetness / 100.0
            - self.friction_deposit_loss * cfg.precipitation_deposits / 100.0;
        WeatherEffects {
            camera_visibility: camera.max(cfg.fog_distance),
            lidar_visibility: self.lidar_clear_range * (1.0 - self.lidar_fog_loss * fog),
            detection_dropout: self.dropout_per_precip * precip,
            position_noise_sigma: self.noise_scale * (cfg.precipitation + cfg.fog_density) / 200.0,
            friction: friction.max(self.friction_floor),
        }
    }
}

/// Effects under the default degradation model.
pub fn effects(cfg: &WeatherConfig) -> WeatherEffects {
    WeatherModel::default().effects(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn good_weather_has_no_degradation() {
        let e = effects(&preset("good").unwrap());
        assert_eq!(e.camera_visibility, 150.0);
        assert_eq!(e.lidar_visibility, 100.0);
        assert_eq!(e.friction, 1.0);
        assert_eq!(e.detection_dropout, 0.0);
        assert_eq!(e.position_noise_sigma, 0.0);
    }

    #[test]
    fn fog_camera_visibility() {
        let e = effects(&Preset::Fog.config());
        // 150 * (1 - 0.70) * (1 - 0.3 * 0.05)
        assert!((e.camera_visibility - 44.325).abs() < 1e-9);
        assert!((e.lidar_visibility - 79.0).abs() < 1e-9);
    }

    #[test]
    fn wetness_friction() {
        let e = effects(&Preset::Wetness.config());
        assert!((e.friction - 0.6).abs() < 1e-12);
        assert!((max_braking(&e) - 5.886).abs() < 1e-9);
    }

    #[test]
    fn max_braking_values() {
        let mk = |friction| WeatherEffects {
            camera_visibility: 0.0,
            lidar_visibility: 0.0,
            detection_dropout: 0.0,
            position_noise_sigma: 0.0,
            friction,
        };
        assert_eq!(max_braking(&mk(1.0)), 9.81);
        assert!((max_braking(&mk(0.3)) - 2.943).abs() < 1e-12);
    }

    #[test]
    fn camera_visibility_floored_at_fog_distance() {
        let cfg = WeatherConfig {
            fog_density: 100.0,
            fog_distance: 12.0,
            ..Preset::Good.config()
        };
        assert_eq!(effects(&cfg).camera_visibility, 12.0);
    }

    #[test]
    fn unknown_preset() {
        assert_eq!(
            preset("hail"),
            Err(WeatherError::UnknownPreset("hail".into()))
        );
    }

    #[test]
    fn presets_are_valid() {
        for p in Preset::ALL {
            p.config().validate().unwrap();
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    fn any_config() -> impl Strategy<Value = WeatherConfig> {
        (
            [const { 0.0..=100.0f64 }; 6],
            -90.0..=90.0f64,
            0.0..500.0f64,
        )
            .prop_map(|(p, sun, fog_distance)| WeatherConfig {
                cloudiness: p[0],
                precipitation: p[1],
                precipitation_deposits: p[2],
                wind_intensity: p[3],
                sun_altitude_angle: sun,
                fog_density: p[4],
                fog_distance,
                wetness: p[5],
            })
    }

    proptest! {
        #[test]
        fn effects_respect_invariants(cfg in any_config()) {
            let e = effects(&cfg);
            prop_assert!(e.camera_visibility >= 0.0);
            prop_assert!(e.lidar_visibility >= 0.0);
            prop_assert!((0.0..=1.0).contains(&e.detection_dropout));
            prop_assert!(e.position_noise_sigma >= 0.0);
            prop_assert!(e.friction > 0.0 && e.friction <= 1.0);
        }

        #[test]
        fn visibility_and_friction_monotone(cfg in any_config(), bump in 0.0..=100.0f64) {
            let base = effects(&cfg);
            let foggier = WeatherConfig { fog_density: (cfg.fog_density + bump).min(100.0), ..cfg };
            let rainier = WeatherConfig { precipitation: (cfg.precipitation + bump).min(100.0), ..cfg };
            let wetter = WeatherConfig { wetness: (cfg.wetness + bump).min(100.0), ..cfg };
            prop_assert!(effects(&foggier).camera_visibility <= base.camera_visibility);
            prop_assert!(effects(&rainier).camera_visibility <= base.camera_visibility);
            prop_assert!(effects(&wetter).friction <= base.friction);
        }

        #[test]
        fn preset_serialization_round_trip(idx in 0usize..5) {
            let cfg = Preset::ALL[idx].config();
            let text = toml::to_string(&cfg).unwrap();
            let back: WeatherConfig = toml::from_str(&text).unwrap();
            prop_assert_eq!(back, cfg);
            let json = serde_json::to_string(&cfg).unwrap();
            prop_assert_eq!(serde_json::from_str::<WeatherConfig>(&json).unwrap(), cfg);
        }
    }
}
