//! Synthetic obstacle-detection world.
//!
//! Three detectors (lidar, camera, radar) observe a planar scene through
//! sector fields of view and a fusion module merges their outputs. Faults
//! are injected per output; the pairwise consistency checks produce
//! syndromes for the obstacle-detection graph, and comparing each output
//! with ground truth produces the labels.

pub mod checks;
pub mod config;
pub mod dataset;
pub mod geometry;
pub mod matching;
pub mod sim;

pub use checks::{
    label_ground_truth, run_checks, temporal_adjust, test_misclassification, test_misdetection, test_misposition,
    SpeedTable,
};
pub use config::{DetectorModel, FusionModel, InjectionRates, ObstacleScript, ScenarioConfig, SENSOR_IDS};
pub use dataset::{from_ndjson, generate_dataset, split_sizes, to_ndjson, Dataset, DatasetSample, GraphKind, Split};
pub use geometry::{restrict_to_region, FieldOfView, Obstacle, ObstacleClass, Pose, Rect, Region, SensorSpec, Vec2};
pub use matching::{assign, match_obstacles, Match};
pub use sim::{fuse, simulate_scene, Frame, Scenario, FUSED, N_LABELS, N_OUTPUTS, N_TESTS};
