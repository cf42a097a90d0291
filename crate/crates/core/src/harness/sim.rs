use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::checks::{label_ground_truth, run_checks, temporal_adjust};
use super::config::{DetectorModel, InjectionRates, ObstacleScript, ScenarioConfig, SENSOR_IDS};
use super::geometry::{restrict_to_region, Obstacle, ObstacleClass, Rect, Region, SensorSpec, Vec2};
use crate::bits::{FaultState, Outcome, Syndrome};
use crate::error::{Error, Result};
use crate::graph::{APOLLO_OUTPUTS, APOLLO_PAIRS};
use crate::rng::{stream, Stream};

pub const N_OUTPUTS: usize = 4;
pub const FUSED: usize = 3;
/// Failure modes of the obstacle-detection graph: one per module, then
/// three per output.
pub const N_LABELS: usize = N_OUTPUTS + 3 * N_OUTPUTS;
pub const N_TESTS: usize = 3 * APOLLO_PAIRS.len();

const GHOST_ID_BASE: u32 = 1 << 20;
const PLACEMENT_TRIES: usize = 32;

/// One tick: ground truth and the four outputs (lidar, camera, radar,
/// fused).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub time: f64,
    pub truth: Vec<Obstacle>,
    pub outputs: [Vec<Obstacle>; N_OUTPUTS],
    /// Detectors inside an out-of-distribution episode.
    pub ood: [bool; 3],
    pub misassociated: bool,
}

/// A validated config with its derived regions.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    sensors: [SensorSpec; 3],
    detectors: [DetectorModel; 3],
    /// Coverage of each output's region, ROI included.
    output_regions: [Region; N_OUTPUTS],
    pair_regions: Vec<Region>,
    /// Regions an output is checked in: its own and one per test partner.
    label_regions: [Vec<Region>; N_OUTPUTS],
}

fn pick<T: Clone>(items: &[T]) -> [T; 3] {
    [items[0].clone(), items[1].clone(), items[2].clone()]
}

impl Scenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let sensors: Vec<SensorSpec> = SENSOR_IDS
            .iter()
            .map(|id| config.sensor(id).cloned().expect("validated"))
            .collect();
        let detectors: Vec<DetectorModel> = SENSOR_IDS
            .iter()
            .map(|id| config.detector(id).cloned().expect("validated"))
            .collect();
        let coverage: Vec<Vec<SensorSpec>> = (0..N_OUTPUTS)
            .map(|o| if o == FUSED { sensors.clone() } else { vec![sensors[o].clone()] })
            .collect();
        let output_regions: Vec<Region> = coverage
            .iter()
            .map(|c| Region::new(config.roi).and_covered_by(c))
            .collect();
        let pair_regions: Vec<Region> = APOLLO_PAIRS
            .iter()
            .map(|&(a, b)| {
                Region::new(config.roi)
                    .and_covered_by(&coverage[a])
                    .and_covered_by(&coverage[b])
            })
            .collect();
        let label_regions: Vec<Vec<Region>> = (0..N_OUTPUTS)
            .map(|o| {
                let mut rs = vec![output_regions[o].clone()];
                for (p, &(a, b)) in APOLLO_PAIRS.iter().enumerate() {
                    if a == o || b == o {
                        rs.push(pair_regions[p].clone());
                    }
                }
                rs
            })
            .collect();
        Ok(Scenario {
            config: config.clone(),
            sensors: pick(&sensors),
            detectors: pick(&detectors),
            output_regions: [0, 1, 2, 3].map(|o| output_regions[o].clone()),
            pair_regions,
            label_regions: [0, 1, 2, 3].map(|o| label_regions[o].clone()),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn pair_region(&self, pair: usize) -> &Region {
        &self.pair_regions[pair]
    }

    /// Frames at `0, tick, 2 tick, ...` strictly before `duration`.
    pub fn simulate(&self, duration: f64, seed: u64) -> Result<Vec<Frame>> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Config(format!("duration must be positive, got {duration}")));
        }
        let tick = self.config.tick;
        let n_frames = ((duration / tick) - 1e-9).ceil().max(1.0) as usize;
        let mut scene_rng = stream(seed, Stream::Scene);
        let mut inj = stream(seed, Stream::Injection);
        let mut truth = self.initial_obstacles(&mut scene_rng);
        let mut ood_left = [0u32; 3];
        let mut frames = Vec::with_capacity(n_frames);
        for k in 0..n_frames {
            if k > 0 {
                for o in &mut truth {
                    o.position = o.position + o.velocity.unwrap_or(Vec2::ZERO) * tick;
                }
            }
            let mut ghosts = 0;
            let mut ood = [false; 3];
            let mut outputs: [Vec<Obstacle>; N_OUTPUTS] = Default::default();
            for d in 0..3 {
                let model = &self.detectors[d];
                if ood_left[d] == 0 && inj.gen_bool(model.ood_rate) {
                    ood_left[d] = model.ood_ticks;
                }
                ood[d] = ood_left[d] > 0;
                ood_left[d] = ood_left[d].saturating_sub(1);
                let mut out: Vec<Obstacle> = truth
                    .iter()
                    .filter(|o| self.sensors[d].covers(o.position))
                    .map(|o| Obstacle {
                        velocity: if model.reports_velocity { o.velocity } else { None },
                        ..o.clone()
                    })
                    .collect();
                let rates = if ood[d] {
                    model.injection.boosted(model.ood_boost)
                } else {
                    model.injection
                };
                self.inject(d, &mut out, &rates, &truth, model.reports_velocity, &mut ghosts, &mut inj);
                outputs[d] = out;
            }
            let mut fused = fuse(&outputs[..3], 2.0 * self.config.theta);
            let misassociated = fused.len() >= 2 && inj.gen_bool(self.config.fusion.misassociation);
            if misassociated {
                merge_closest(&mut fused);
            }
            let fusion_rates = self.config.fusion.injection;
            let with_velocity = self.detectors.iter().any(|d| d.reports_velocity);
            self.inject(FUSED, &mut fused, &fusion_rates, &truth, with_velocity, &mut ghosts, &mut inj);
            outputs[FUSED] = fused;
            frames.push(Frame {
                time: k as f64 * tick,
                truth: truth.clone(),
                outputs,
                ood,
                misassociated,
            });
        }
        Ok(frames)
    }

    fn initial_obstacles(&self, rng: &mut ChaCha8Rng) -> Vec<Obstacle> {
        match &self.config.obstacles {
            ObstacleScript::Fixed { obstacles } => obstacles
                .iter()
                .map(|o| Obstacle {
                    velocity: Some(o.velocity.unwrap_or(Vec2::ZERO)),
                    ..o.clone()
                })
                .collect(),
            ObstacleScript::Random {
                min_count,
                max_count,
                spawn,
                classes,
                speed_scale,
            } => {
                let n = rng.gen_range(*min_count..=*max_count);
                (0..n)
                    .map(|i| {
                        let position = uniform_in(spawn, rng);
                        let class = *classes.choose(rng).expect("validated non-empty");
                        let speed = self.config.speeds.speed(class) * uniform(speed_scale[0], speed_scale[1], rng);
                        let heading = rng.gen_range(0.0..2.0 * PI);
                        Obstacle::new(i as u32, position, Some(Vec2::from_polar(speed, heading)), class)
                    })
                    .collect()
            }
        }
    }

    /// Applies at most one corruption of each kind to output `o`. Targets
    /// are obstacles inside the output's region; displacements and ghosts
    /// are placed so that they do not change which region an obstacle is
    /// in and cannot be associated with another obstacle, so each injected
    /// kind shows up only as that kind in the labels.
    #[allow(clippy::too_many_arguments)]
    fn inject(
        &self,
        o: usize,
        out: &mut Vec<Obstacle>,
        rates: &InjectionRates,
        truth: &[Obstacle],
        with_velocity: bool,
        ghosts: &mut u32,
        rng: &mut ChaCha8Rng,
    ) {
        let theta = self.config.theta;
        let target = &self.output_regions[o];
        let targets = |out: &[Obstacle]| -> Vec<usize> {
            (0..out.len()).filter(|&i| target.contains(out[i].position)).collect()
        };
        if rng.gen_bool(rates.misdetect) {
            // A dropped detection next to another obstacle would let fusion
            // pair the remaining sensors with the wrong one.
            let apart: Vec<usize> = targets(out)
                .into_iter()
                .filter(|&i| {
                    truth
                        .iter()
                        .filter(|t| t.id != out[i].id)
                        .all(|t| t.position.distance(out[i].position) > 2.0 * theta)
                })
                .collect();
            if let Some(&i) = apart.choose(rng) {
                out.remove(i);
            }
        }
        if rng.gen_bool(rates.misposition) {
            if let Some(&i) = targets(out).choose(rng) {
                let p = out[i].position;
                let [lo, hi] = rates.misposition_magnitude;
                for _ in 0..PLACEMENT_TRIES {
                    let s = uniform(lo, hi, rng);
                    let q = p + Vec2::from_polar(s, rng.gen_range(0.0..2.0 * PI));
                    // Fusion may land anywhere on the segment at these
                    // fractions, so every region must agree there too.
                    let same_regions = [1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0].iter().all(|&t| {
                        let x = p + (q - p) * t;
                        self.label_regions.iter().flatten().all(|r| r.contains(p) == r.contains(x))
                    });
                    let isolated = truth
                        .iter()
                        .filter(|t| t.id != out[i].id)
                        .all(|t| t.position.distance(p).min(t.position.distance(q)) > 2.0 * theta + s);
                    if same_regions && isolated {
                        out[i].position = q;
                        break;
                    }
                }
            }
        }
        if rng.gen_bool(rates.misclassify) {
            if let Some(&i) = targets(out).choose(rng) {
                let others: Vec<ObstacleClass> = ObstacleClass::ALL
                    .into_iter()
                    .filter(|&c| c != out[i].class)
                    .collect();
                out[i].class = *others.choose(rng).expect("six classes");
            }
        }
        if rng.gen_bool(rates.ghost) {
            for _ in 0..PLACEMENT_TRIES {
                let q = uniform_in(&self.config.roi, rng);
                let clear = |xs: &[Obstacle]| xs.iter().all(|t| t.position.distance(q) > 2.0 * theta);
                if target.contains(q) && clear(truth) && clear(out) {
                    let class = *ObstacleClass::ALL.choose(rng).expect("non-empty");
                    out.push(Obstacle::new(
                        GHOST_ID_BASE + *ghosts,
                        q,
                        with_velocity.then_some(Vec2::ZERO),
                        class,
                    ));
                    *ghosts += 1;
                    break;
                }
            }
        }
    }

    /// Outcomes of the pairwise tests, pair-major with misdetection,
    /// misposition, misclassification per pair.
    pub fn syndrome(&self, frame: &Frame) -> Syndrome {
        let mut s = Vec::with_capacity(N_TESTS);
        for (p, &(a, b)) in APOLLO_PAIRS.iter().enumerate() {
            let r = &self.pair_regions[p];
            let oa = restrict_to_region(&frame.outputs[a], r);
            let ob = restrict_to_region(&frame.outputs[b], r);
            s.extend(run_checks(&oa, &ob, self.config.theta));
        }
        Syndrome::from_outcomes(s)
    }

    /// Cross-time tests: output `a` of `prev`, advanced by one tick,
    /// against output `b` of `next`. Only obstacles inside the pair region
    /// at both instants take part, so nothing is counted for merely
    /// entering or leaving it.
    pub fn cross_syndrome(&self, prev: &Frame, next: &Frame) -> Syndrome {
        let dt = self.config.tick;
        let mut s = Vec::with_capacity(N_TESTS);
        for (p, &(a, b)) in APOLLO_PAIRS.iter().enumerate() {
            let r = &self.pair_regions[p];
            let (moved, theta) = temporal_adjust(&prev.outputs[a], dt, &self.config.speeds, self.config.theta);
            let oa: Vec<Obstacle> = moved
                .into_iter()
                .zip(&prev.outputs[a])
                .filter(|(m, o)| r.contains(m.position) && r.contains(o.position))
                .map(|(m, _)| m)
                .collect();
            let ob: Vec<Obstacle> = next.outputs[b]
                .iter()
                .filter(|o| {
                    let back = o.position - o.velocity.unwrap_or(Vec2::ZERO) * dt;
                    r.contains(o.position) && r.contains(back)
                })
                .cloned()
                .collect();
            s.extend(run_checks(&oa, &ob, theta));
        }
        Syndrome::from_outcomes(s)
    }

    /// Ground-truth labels in graph order: module bits are the OR of their
    /// output's bits.
    pub fn labels(&self, frame: &Frame) -> FaultState {
        let mut bits = vec![false; N_LABELS];
        for o in 0..N_OUTPUTS {
            for r in &self.label_regions[o] {
                let l = label_ground_truth(&frame.outputs[o], &frame.truth, r, self.config.theta);
                for (k, hit) in l.into_iter().enumerate() {
                    bits[N_OUTPUTS + 3 * o + k] |= hit;
                }
            }
            bits[o] = bits[N_OUTPUTS + 3 * o..N_OUTPUTS + 3 * o + 3].iter().any(|&b| b);
        }
        FaultState::from_bits(bits)
    }
}

pub fn simulate_scene(config: &ScenarioConfig, duration: f64, seed: u64) -> Result<Vec<Frame>> {
    Scenario::new(config)?.simulate(duration, seed)
}

/// Output name for an index into [`Frame::outputs`].
pub fn output_name(o: usize) -> &'static str {
    APOLLO_OUTPUTS[o]
}

fn uniform(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    if lo < hi {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn uniform_in(r: &Rect, rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::new(uniform(r.min.x, r.max.x, rng), uniform(r.min.y, r.max.y, rng))
}

/// Nearest-neighbour association within `gate`, at most one detection per
/// sensor per cluster. Fused position and velocity are member averages,
/// the class is the majority with earlier sensors winning ties.
pub fn fuse(inputs: &[Vec<Obstacle>], gate: f64) -> Vec<Obstacle> {
    struct Cluster {
        sensors: Vec<usize>,
        members: Vec<Obstacle>,
    }
    impl Cluster {
        fn centroid(&self) -> Vec2 {
            let sum = self.members.iter().fold(Vec2::ZERO, |a, m| a + m.position);
            sum * (1.0 / self.members.len() as f64)
        }
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for (s, dets) in inputs.iter().enumerate() {
        for d in dets {
            let best = clusters
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.sensors.contains(&s))
                .map(|(i, c)| (i, c.centroid().distance(d.position)))
                .filter(|&(_, dist)| dist < gate)
                .min_by(|x, y| x.1.total_cmp(&y.1));
            match best {
                Some((i, _)) => {
                    clusters[i].sensors.push(s);
                    clusters[i].members.push(d.clone());
                }
                None => clusters.push(Cluster {
                    sensors: vec![s],
                    members: vec![d.clone()],
                }),
            }
        }
    }
    clusters
        .into_iter()
        .map(|c| {
            let n = c.members.len() as f64;
            let velocities: Vec<Vec2> = c.members.iter().filter_map(|m| m.velocity).collect();
            let velocity = (!velocities.is_empty())
                .then(|| velocities.iter().fold(Vec2::ZERO, |a, &v| a + v) * (1.0 / velocities.len() as f64));
            let position = c.members.iter().fold(Vec2::ZERO, |a, m| a + m.position) * (1.0 / n);
            let count = |cls| c.members.iter().filter(|m| m.class == cls).count();
            let class = c
                .members
                .iter()
                .map(|m| m.class)
                .fold(None, |best: Option<ObstacleClass>, cls| match best {
                    Some(b) if count(b) >= count(cls) => Some(b),
                    _ => Some(cls),
                })
                .expect("clusters are non-empty");
            Obstacle::new(c.members[0].id, position, velocity, class)
        })
        .collect()
}

fn merge_closest(fused: &mut Vec<Obstacle>) {
    let mut best = (0, 1, f64::INFINITY);
    for i in 0..fused.len() {
        for j in i + 1..fused.len() {
            let d = fused[i].position.distance(fused[j].position);
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    let (i, j, _) = best;
    let other = fused.remove(j);
    let keep = &mut fused[i];
    keep.position = (keep.position + other.position) * 0.5;
    keep.velocity = match (keep.velocity, other.velocity) {
        (Some(a), Some(b)) => Some((a + b) * 0.5),
        (v, None) | (None, v) => v,
    };
}

/// True when a syndrome has no FAIL.
pub fn all_pass(s: &Syndrome) -> bool {
    s.outcomes().iter().all(|&o| o == Outcome::Pass)
}
