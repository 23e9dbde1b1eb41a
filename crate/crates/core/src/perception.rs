//! Simulated pedestrian detection and a greedy nearest-neighbor tracker.
//!
//! The detector takes ground-truth pedestrians, keeps those inside the
//! camera wedge with a clear line of sight, and perturbs their positions.
//! The tracker is frame-agnostic: it estimates velocities by smoothed
//! finite differences of whatever frame the detections are expressed in.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::crowd::Pedestrian;
use crate::geometry::{to_robot_frame, Pose2D, Vec2, Velocity2D};
use crate::world::{ray_circle_distance, ray_grid_distance, Disc, OccupancyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub fov: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub position_noise_sigma: f64,
    pub dropout_prob: f64,
}

impl Default for DetectorConfig {
    /// ZED depth camera: 0.3-20 m, 90 degree FOV.
    fn default() -> Self {
        Self { fov: PI / 2.0, range_min: 0.3, range_max: 20.0, position_noise_sigma: 0.05, dropout_prob: 0.05 }
    }
}

impl DetectorConfig {
    /// Noise-free, never drops.
    pub fn ideal() -> Self {
        Self { position_noise_sigma: 0.0, dropout_prob: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return Err(format!("detector fov {} must lie in (0, 2pi]", self.fov));
        }
        if !(self.range_min >= 0.0 && self.range_min < self.range_max) {
            return Err("detector needs 0 <= range_min < range_max".into());
        }
        if !(self.position_noise_sigma >= 0.0 && self.position_noise_sigma.is_finite()) {
            return Err("noise sigma must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err("dropout probability must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// One detection, relative to the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub rel_position: Vec2,
}

/// Returns noisy robot-frame positions of the visible pedestrians, in
/// roster order.
pub fn detect<R: Rng + ?Sized>(
    peds: &[Pedestrian],
    robot_pose: &Pose2D,
    grid: &OccupancyGrid,
    cfg: &DetectorConfig,
    rng: &mut R,
) -> Vec<Detection> {
    let origin = robot_pose.position();
    let noise =
        (cfg.position_noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.position_noise_sigma).expect("sigma validated"));
    let mut out = Vec::new();
    for (i, p) in peds.iter().enumerate() {
        let rel = to_robot_frame(p.position, robot_pose);
        let dist = rel.norm();
        if dist < cfg.range_min || dist > cfg.range_max || rel.angle().abs() > cfg.fov / 2.0 {
            continue;
        }
        let bearing = (p.position - origin).angle();
        if ray_grid_distance(grid, origin, bearing, dist).is_some_and(|hit| hit < dist) {
            continue;
        }
        let occluded = peds.iter().enumerate().any(|(j, q)| {
            j != i
                && q.position.distance(origin) < dist
                && ray_circle_distance(origin, bearing, &Disc { center: q.position, radius: q.radius })
                    .is_some_and(|t| t < dist)
        });
        if occluded {
            continue;
        }
        // The dropout draw happens for every visible pedestrian so the
        // stream stays aligned whatever the outcome.
        let dropped = rng.random::<f64>() < cfg.dropout_prob;
        let jitter = match &noise {
            Some(n) => Vec2::new(n.sample(rng), n.sample(rng)),
            None => Vec2::ZERO,
        };
        if !dropped {
            out.push(Detection { rel_position: rel + jitter });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedPedestrian {
    pub track_id: u32,
    pub rel_position: Vec2,
    pub rel_velocity: Velocity2D,
    /// Steps since the track was created.
    pub age: u32,
    /// Consecutive steps without a matching detection.
    pub missed: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub gate: f64,
    pub smoothing: f64,
    pub max_coast_steps: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self { gate: 1.0, smoothing: 0.7, max_coast_steps: 5 }
    }
}

/// Greedy nearest-neighbor tracker with exponentially smoothed
/// finite-difference velocities.
#[derive(Debug, Clone, Default)]
pub struct Tracker {
    config: TrackerConfig,
    tracks: Vec<TrackedPedestrian>,
    next_id: u32,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self { config, tracks: Vec::new(), next_id: 0 }
    }

    pub fn tracks(&self) -> &[TrackedPedestrian] {
        &self.tracks
    }

    pub fn reset(&mut self) {
        self.tracks.clear();
        self.next_id = 0;
    }

    /// Associates `detections` (positions in a common frame) with the
    /// existing tracks and returns the surviving tracks.
    pub fn update(&mut self, detections: &[Vec2], dt: f64) -> &[TrackedPedestrian] {
        assert!(dt > 0.0, "tracker dt must be positive");
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            for (di, d) in detections.iter().enumerate() {
                let dist = t.rel_position.distance(*d);
                if dist <= self.config.gate {
                    pairs.push((dist, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut track_used = vec![false; self.tracks.len()];
        let mut det_used = vec![false; detections.len()];
        let alpha = self.config.smoothing;
        for (_, ti, di) in pairs {
            if track_used[ti] || det_used[di] {
                continue;
            }
            track_used[ti] = true;
            det_used[di] = true;
            let t = &mut self.tracks[ti];
            // Coasting tracks span several steps since their last fix.
            let elapsed = dt * f64::from(t.missed + 1);
            let raw = (detections[di] - t.rel_position) * (1.0 / elapsed);
            t.rel_velocity = raw * alpha + t.rel_velocity * (1.0 - alpha);
            t.rel_position = detections[di];
            t.missed = 0;
        }
        for (t, used) in self.tracks.iter_mut().zip(&track_used) {
            t.age += 1;
            if !used {
                t.missed += 1;
            }
        }
        let max_coast = self.config.max_coast_steps;
        self.tracks.retain(|t| t.missed <= max_coast);
        for (d, used) in detections.iter().zip(det_used) {
            if !used {
                self.tracks.push(TrackedPedestrian {
                    track_id: self.next_id,
                    rel_position: *d,
                    rel_velocity: Vec2::ZERO,
                    age: 0,
                    missed: 0,
                });
                self.next_id += 1;
            }
        }
        &self.tracks
    }
}

/// Functional form of [`Tracker::update`] with the default configuration.
pub fn update_tracks(tracker: &mut Tracker, detections: &[Detection], dt: f64) -> Vec<TrackedPedestrian> {
    let positions: Vec<Vec2> = detections.iter().map(|d| d.rel_position).collect();
    tracker.update(&positions, dt).to_vec()
}
