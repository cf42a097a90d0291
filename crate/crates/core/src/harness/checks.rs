//! Pairwise consistency checks between obstacle sets.

use serde::{Deserialize, Serialize};

use super::geometry::{restrict_to_region, Obstacle, ObstacleClass, Region};
use super::matching::{match_obstacles, Match};
use crate::bits::Outcome;

/// FAIL iff the two sets have different sizes.
pub fn test_misdetection(a: &[Obstacle], b: &[Obstacle]) -> Outcome {
    Outcome::from_bit(a.len() != b.len())
}

/// FAIL iff some matched pair is at least `theta` apart.
pub fn test_misposition(matches: &[Match], theta: f64) -> Outcome {
    Outcome::from_bit(matches.iter().any(|m| m.distance >= theta))
}

/// FAIL iff some matched pair disagrees on class.
pub fn test_misclassification(a: &[Obstacle], b: &[Obstacle], matches: &[Match]) -> Outcome {
    Outcome::from_bit(matches.iter().any(|m| a[m.a].class != b[m.b].class))
}

/// Misdetection, misposition and misclassification outcomes of `a` against
/// `b`, both already restricted to the same region.
pub fn run_checks(a: &[Obstacle], b: &[Obstacle], theta: f64) -> [Outcome; 3] {
    let m = match_obstacles(a, b);
    [
        test_misdetection(a, b),
        test_misposition(&m, theta),
        test_misclassification(a, b, &m),
    ]
}

/// Per-kind labels of one output against ground truth inside `region`,
/// in the same order as [`run_checks`].
pub fn label_ground_truth(output: &[Obstacle], truth: &[Obstacle], region: &Region, theta: f64) -> [bool; 3] {
    let out = restrict_to_region(output, region);
    let gt = restrict_to_region(truth, region);
    run_checks(&out, &gt, theta).map(Outcome::is_fail)
}

/// Class-average speeds in m/s, used when a velocity is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedTable {
    pub car: f64,
    pub truck: f64,
    pub pedestrian: f64,
    pub cyclist: f64,
    pub animal: f64,
    pub cone: f64,
}

impl Default for SpeedTable {
    fn default() -> Self {
        SpeedTable {
            car: 10.0,
            truck: 10.0,
            pedestrian: 1.5,
            cyclist: 5.0,
            animal: 1.5,
            cone: 0.0,
        }
    }
}

impl SpeedTable {
    pub fn speed(&self, class: ObstacleClass) -> f64 {
        match class {
            ObstacleClass::Car => self.car,
            ObstacleClass::Truck => self.truck,
            ObstacleClass::Pedestrian => self.pedestrian,
            ObstacleClass::Cyclist => self.cyclist,
            ObstacleClass::Animal => self.animal,
            ObstacleClass::Cone => self.cone,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.car, self.truck, self.pedestrian, self.cyclist, self.animal, self.cone]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Moves obstacles `dt` seconds forward. Obstacles without a velocity stay
/// put and instead widen the threshold by the distance their class
/// could cover; the widest such margin wins.
pub fn temporal_adjust(obstacles: &[Obstacle], dt: f64, speeds: &SpeedTable, theta: f64) -> (Vec<Obstacle>, f64) {
    let mut margin: f64 = 0.0;
    let moved = obstacles
        .iter()
        .map(|o| {
            let mut o = o.clone();
            match o.velocity {
                Some(v) => o.position = o.position + v * dt,
                None => margin = margin.max(speeds.speed(o.class) * dt),
            }
            o
        })
        .collect();
    (moved, theta + margin)
}
