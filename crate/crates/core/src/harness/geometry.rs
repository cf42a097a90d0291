use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        Vec2::new(r * angle.cos(), r * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleClass {
    Car,
    Truck,
    Pedestrian,
    Cyclist,
    Animal,
    Cone,
}

impl ObstacleClass {
    pub const ALL: [ObstacleClass; 6] = [
        ObstacleClass::Car,
        ObstacleClass::Truck,
        ObstacleClass::Pedestrian,
        ObstacleClass::Cyclist,
        ObstacleClass::Animal,
        ObstacleClass::Cone,
    ];
}

/// Planar obstacle; detections use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub position: Vec2,
    /// `None` when the producer does not estimate velocity.
    #[serde(default)]
    pub velocity: Option<Vec2>,
    pub class: ObstacleClass,
}

impl Obstacle {
    pub fn new(id: u32, position: Vec2, velocity: Option<Vec2>, class: ObstacleClass) -> Self {
        Obstacle {
            id,
            position,
            velocity,
            class,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_none_or(Vec2::is_finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    /// Radians, counter-clockwise from +x.
    pub heading: f64,
}

/// Angular sector relative to the mount heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOfView {
    pub bearing: f64,
    pub half_angle: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub id: String,
    #[serde(default)]
    pub mount: Pose,
    pub fov: FieldOfView,
}

fn wrap_angle(a: f64) -> f64 {
    let a = (a + PI).rem_euclid(2.0 * PI) - PI;
    if a < -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

impl SensorSpec {
    pub fn validate(&self) -> Result<()> {
        let f = &self.fov;
        let ok = f.half_angle > 0.0
            && f.half_angle <= PI
            && f.range > 0.0
            && f.range.is_finite()
            && f.bearing.is_finite()
            && self.mount.position.is_finite()
            && self.mount.heading.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("sensor `{}` has a malformed field of view", self.id)))
        }
    }

    pub fn covers(&self, p: Vec2) -> bool {
        let rel = p - self.mount.position;
        let r = rel.norm();
        if r > self.fov.range {
            return false;
        }
        if r == 0.0 || self.fov.half_angle >= PI {
            return true;
        }
        let off = wrap_angle(rel.y.atan2(rel.x) - self.mount.heading - self.fov.bearing);
        off.abs() <= self.fov.half_angle
    }
}

/// Axis-aligned rectangle, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub const fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min.x < self.max.x && self.min.y < self.max.y {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} is not a well-formed rectangle")))
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }
}

/// A region of interest intersected with sensor coverage: a point is inside
/// when it lies in `roi` and is covered by at least one sensor of every
/// group. A fused output covers the union of its sensors, so it is one
/// group with several members.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub roi: Rect,
    pub coverage: Vec<Vec<SensorSpec>>,
}

impl Region {
    pub fn new(roi: Rect) -> Self {
        Region {
            roi,
            coverage: Vec::new(),
        }
    }

    pub fn and_covered_by(mut self, group: &[SensorSpec]) -> Self {
        self.coverage.push(group.to_vec());
        self
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.roi.contains(p) && self.coverage.iter().all(|g| g.iter().any(|s| s.covers(p)))
    }
}

pub fn restrict_to_region(obstacles: &[Obstacle], region: &Region) -> Vec<Obstacle> {
    obstacles
        .iter()
        .filter(|o| region.contains(o.position))
        .cloned()
        .collect()
}
