use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::checks::SpeedTable;
use super::geometry::{FieldOfView, Obstacle, ObstacleClass, Pose, Rect, SensorSpec, Vec2};
use crate::error::{Error, Result};

/// Sensor ids the obstacle-detection graph expects, in output order.
pub const SENSOR_IDS: [&str; 3] = ["lidar", "camera", "radar"];

/// Per-tick probabilities of corrupting one output with each failure kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectionRates {
    /// Drop one obstacle.
    pub misdetect: f64,
    /// Add an obstacle that does not exist.
    pub ghost: f64,
    pub misposition: f64,
    /// Displacement range in meters, drawn uniformly.
    pub misposition_magnitude: [f64; 2],
    pub misclassify: f64,
}

impl Default for InjectionRates {
    fn default() -> Self {
        InjectionRates::none()
    }
}

impl InjectionRates {
    pub const fn none() -> Self {
        InjectionRates {
            misdetect: 0.0,
            ghost: 0.0,
            misposition: 0.0,
            misposition_magnitude: [3.0, 4.5],
            misclassify: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.misdetect == 0.0 && self.ghost == 0.0 && self.misposition == 0.0 && self.misclassify == 0.0
    }

    pub(crate) fn boosted(&self, factor: f64) -> Self {
        let b = |p: f64| (p * factor).min(1.0);
        InjectionRates {
            misdetect: b(self.misdetect),
            ghost: b(self.ghost),
            misposition: b(self.misposition),
            misposition_magnitude: self.misposition_magnitude,
            misclassify: b(self.misclassify),
        }
    }

    fn validate(&self, owner: &str) -> Result<()> {
        for (name, p) in [
            ("misdetect", self.misdetect),
            ("ghost", self.ghost),
            ("misposition", self.misposition),
            ("misclassify", self.misclassify),
        ] {
            check_probability(owner, name, p)?;
        }
        let [lo, hi] = self.misposition_magnitude;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(Error::Config(format!("{owner}: misposition_magnitude must satisfy 0 <= lo <= hi")));
        }
        Ok(())
    }
}

fn check_probability(owner: &str, name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{owner}: {name} = {p} is not a probability")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub sensor: String,
    #[serde(default)]
    pub injection: InjectionRates,
    /// Per-tick probability of entering an out-of-distribution episode.
    #[serde(default)]
    pub ood_rate: f64,
    #[serde(default = "default_ood_ticks")]
    pub ood_ticks: u32,
    /// Injection rates are multiplied by this during an episode.
    #[serde(default = "default_ood_boost")]
    pub ood_boost: f64,
    #[serde(default = "default_true")]
    pub reports_velocity: bool,
}

fn default_ood_ticks() -> u32 {
    6
}

fn default_ood_boost() -> f64 {
    4.0
}

fn default_true() -> bool {
    true
}

impl DetectorModel {
    pub fn nominal(sensor: &str) -> Self {
        DetectorModel {
            sensor: sensor.into(),
            injection: InjectionRates::none(),
            ood_rate: 0.0,
            ood_ticks: default_ood_ticks(),
            ood_boost: default_ood_boost(),
            reports_velocity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionModel {
    pub injection: InjectionRates,
    /// Per-tick probability of merging the two closest fused obstacles.
    pub misassociation: f64,
}

impl Default for FusionModel {
    fn default() -> Self {
        FusionModel {
            injection: InjectionRates::none(),
            misassociation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleScript {
    /// The same obstacles start every scene.
    Fixed { obstacles: Vec<Obstacle> },
    /// Fresh obstacles per scene, uniform in `spawn`, heading uniform,
    /// speed a random fraction of the class average.
    Random {
        min_count: usize,
        max_count: usize,
        spawn: Rect,
        classes: Vec<ObstacleClass>,
        speed_scale: [f64; 2],
    },
}

impl Default for ObstacleScript {
    fn default() -> Self {
        ObstacleScript::Random {
            min_count: 4,
            max_count: 10,
            spawn: Rect::new(Vec2::new(-40.0, -14.0), Vec2::new(85.0, 14.0)),
            classes: ObstacleClass::ALL.to_vec(),
            speed_scale: [0.2, 0.6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Seconds between test evaluations.
    pub tick: f64,
    /// Seconds per scene; obstacles are re-drawn between scenes.
    pub scene_duration: f64,
    /// Misposition threshold in meters.
    pub theta: f64,
    pub roi: Rect,
    pub sensors: Vec<SensorSpec>,
    pub detectors: Vec<DetectorModel>,
    pub fusion: FusionModel,
    pub obstacles: ObstacleScript,
    pub speeds: SpeedTable,
}

fn sensor(id: &str, x: f64, half_angle: f64, range: f64) -> SensorSpec {
    SensorSpec {
        id: id.into(),
        mount: Pose {
            position: Vec2::new(x, 0.0),
            heading: 0.0,
        },
        fov: FieldOfView {
            bearing: 0.0,
            half_angle,
            range,
        },
    }
}

fn rates(misdetect: f64, ghost: f64, misposition: f64, misclassify: f64) -> InjectionRates {
    InjectionRates {
        misdetect,
        ghost,
        misposition,
        misclassify,
        ..InjectionRates::none()
    }
}

impl Default for ScenarioConfig {
    /// Moderate corruption on every output.
    fn default() -> Self {
        let detector = |id: &str, injection, ood_rate| DetectorModel {
            injection,
            ood_rate,
            ..DetectorModel::nominal(id)
        };
        ScenarioConfig {
            tick: 0.3,
            scene_duration: 15.0,
            theta: 2.5,
            roi: Rect::new(Vec2::new(-30.0, -8.0), Vec2::new(70.0, 8.0)),
            sensors: vec![
                sensor("lidar", 1.0, PI, 60.0),
                sensor("camera", 2.0, 0.6, 50.0),
                sensor("radar", 3.0, 0.35, 90.0),
            ],
            detectors: vec![
                detector("lidar", rates(0.06, 0.03, 0.05, 0.04), 0.02),
                detector("camera", rates(0.08, 0.03, 0.06, 0.06), 0.03),
                detector("radar", rates(0.06, 0.05, 0.03, 0.08), 0.0),
            ],
            fusion: FusionModel {
                injection: rates(0.02, 0.01, 0.02, 0.02),
                misassociation: 0.04,
            },
            obstacles: ObstacleScript::default(),
            speeds: SpeedTable::default(),
        }
    }
}

impl ScenarioConfig {
    /// Default geometry with every injection switched off.
    pub fn nominal() -> Self {
        ScenarioConfig::default().without_injection()
    }

    pub fn without_injection(mut self) -> Self {
        for d in &mut self.detectors {
            d.injection = InjectionRates {
                misposition_magnitude: d.injection.misposition_magnitude,
                ..InjectionRates::none()
            };
            d.ood_rate = 0.0;
        }
        self.fusion.injection = InjectionRates {
            misposition_magnitude: self.fusion.injection.misposition_magnitude,
            ..InjectionRates::none()
        };
        self.fusion.misassociation = 0.0;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn sensor(&self, id: &str) -> Option<&SensorSpec> {
        self.sensors.iter().find(|s| s.id == id)
    }

    pub fn detector(&self, sensor: &str) -> Option<&DetectorModel> {
        self.detectors.iter().find(|d| d.sensor == sensor)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tick", self.tick)?;
        positive("scene_duration", self.scene_duration)?;
        positive("theta", self.theta)?;
        if self.scene_duration < 2.0 * self.tick {
            return Err(Error::Config("scene_duration must cover at least two ticks".into()));
        }
        self.roi.validate("roi")?;
        let mut ids = BTreeSet::new();
        for s in &self.sensors {
            s.validate()?;
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Config(format!("duplicate sensor `{}`", s.id)));
            }
        }
        let mut seen = BTreeSet::new();
        for d in &self.detectors {
            if !ids.contains(d.sensor.as_str()) {
                return Err(Error::Config(format!("detector references unknown sensor `{}`", d.sensor)));
            }
            if !seen.insert(d.sensor.as_str()) {
                return Err(Error::Config(format!("two detectors for sensor `{}`", d.sensor)));
            }
            d.injection.validate(&d.sensor)?;
            check_probability(&d.sensor, "ood_rate", d.ood_rate)?;
            if !(d.ood_boost.is_finite() && d.ood_boost >= 0.0) {
                return Err(Error::Config(format!("{}: ood_boost must be non-negative", d.sensor)));
            }
        }
        for id in SENSOR_IDS {
            if self.sensor(id).is_none() || self.detector(id).is_none() {
                return Err(Error::Config(format!("missing sensor or detector `{id}`")));
            }
        }
        self.fusion.injection.validate("fusion")?;
        check_probability("fusion", "misassociation", self.fusion.misassociation)?;
        if !self.speeds.is_valid() {
            return Err(Error::Config("speeds must be finite and non-negative".into()));
        }
        match &self.obstacles {
            ObstacleScript::Fixed { obstacles } => {
                if let Some(o) = obstacles.iter().find(|o| !o.is_finite()) {
                    return Err(Error::Config(format!("obstacle {} has non-finite coordinates", o.id)));
                }
            }
            ObstacleScript::Random {
                min_count,
                max_count,
                spawn,
                classes,
                speed_scale,
            } => {
                spawn.validate("spawn")?;
                if min_count > max_count {
                    return Err(Error::Config("min_count exceeds max_count".into()));
                }
                if classes.is_empty() {
                    return Err(Error::Config("no obstacle classes".into()));
                }
                let [lo, hi] = *speed_scale;
                if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                    return Err(Error::Config("speed_scale must satisfy 0 <= lo <= hi".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(ScenarioConfig::from_json(&c.to_json()).unwrap(), c);
        let n = ScenarioConfig::nominal();
        assert!(n.detectors.iter().all(|d| d.injection.is_zero() && d.ood_rate == 0.0));
        assert!(n.fusion.injection.is_zero());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ScenarioConfig::from_json(r#"{"theta": 3.0, "tick": 0.1}"#).unwrap();
        assert_eq!(c.theta, 3.0);
        assert_eq!(c.sensors.len(), 3);
    }

    #[test]
    fn malformed_configs() {
        let bad = [
            r#"{"tick": 0}"#,
            r#"{"theta": -1}"#,
            r#"{"tick": 1.0, "scene_duration": 1.5}"#,
            r#"{"unknown_knob": 1}"#,
            r#"{"fusion": {"misassociation": 1.5}}"#,
            r#"{"detectors": [{"sensor": "sonar"}]}"#,
            r#"{"detectors": [{"sensor": "lidar"}]}"#,
            r#"{"roi": {"min": {"x": 1, "y": 1}, "max": {"x": 0, "y": 2}}}"#,
            "not json",
        ];
        for text in bad {
            assert!(matches!(ScenarioConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
        let mut c = ScenarioConfig::default();
        c.detectors[0].injection.misposition_magnitude = [5.0, 4.0];
        assert!(c.validate().is_err());
    }
}
