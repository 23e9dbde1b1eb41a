//! Velocity-obstacle collision cones and the sampling search for a
//! collision-free desired heading.
//!
//! All quantities live in the robot frame. A pedestrian at `p_B` with
//! combined radius `r = r_A + r_B` spans the cone `[theta - beta, theta +
//! beta]` of relative-velocity directions with `theta = atan2(p_By, p_Bx)`
//! and `sin(beta) = r / |p_B|`. A candidate heading is free when, for every
//! pedestrian, the direction of `v_A(heading) - v_B` falls outside that
//! pedestrian's cone.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{interval_contains, wrap_finite, AngularInterval, Vec2, Velocity2D};

/// Heading returned when every sample is blocked.
pub const DEFAULT_FALLBACK_HEADING: f64 = FRAC_PI_2;
pub const DEFAULT_SAMPLE_COUNT: usize = 100;
/// Lower bound on the robot speed used by the search.
pub const MIN_SEARCH_SPEED: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub position: Vec2,
    pub velocity: Velocity2D,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionCone {
    pub interval: AngularInterval,
    pub source_id: usize,
}

/// Outcome of building a cone: either a proper cone or an overlap, where the
/// agents already intersect and no cone exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeResult {
    Cone(CollisionCone),
    Overlap,
}

pub fn collision_cone(robot: &Agent, ped: &Agent) -> ConeResult {
    collision_cone_with_id(robot, ped, 0)
}

pub fn collision_cone_with_id(robot: &Agent, ped: &Agent, source_id: usize) -> ConeResult {
    let rel = ped.position - robot.position;
    let dist = rel.norm();
    let combined = robot.radius + ped.radius;
    if !(dist > combined) {
        return ConeResult::Overlap;
    }
    let theta = rel.angle();
    let beta = (combined / dist).asin();
    match AngularInterval::new(theta, beta) {
        Ok(interval) => ConeResult::Cone(CollisionCone { interval, source_id }),
        Err(_) => ConeResult::Overlap,
    }
}

/// Direction of `v_A - v_B` where `v_A` has speed `speed` along `heading`.
/// A zero relative velocity maps to 0.
pub fn relative_velocity_angle(speed: f64, heading: f64, ped_velocity: Velocity2D) -> f64 {
    let (s, c) = heading.sin_cos();
    let y = speed * s - ped_velocity.y;
    let x = speed * c - ped_velocity.x;
    if x == 0.0 && y == 0.0 {
        0.0
    } else {
        y.atan2(x)
    }
}

/// Where the candidate headings come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Independent uniform draws on [-pi, pi].
    Random,
    /// `N` evenly spaced angles `-pi + 2 pi (i + 0.5) / N`.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadingSearchConfig {
    pub samples: usize,
    pub mode: SamplingMode,
    pub fallback_heading: f64,
}

impl Default for HeadingSearchConfig {
    fn default() -> Self {
        Self { samples: DEFAULT_SAMPLE_COUNT, mode: SamplingMode::Random, fallback_heading: DEFAULT_FALLBACK_HEADING }
    }
}

/// Candidate headings for `mode`. Random draws consume exactly `n` values
/// from `rng`; stratified sampling consumes none.
pub fn sample_headings<R: Rng + ?Sized>(n: usize, mode: SamplingMode, rng: &mut R) -> Vec<f64> {
    match mode {
        SamplingMode::Random => (0..n).map(|_| rng.random_range(-PI..=PI)).collect(),
        SamplingMode::Stratified => (0..n).map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / n as f64).collect(),
    }
}

fn heading_is_free(heading: f64, speed: f64, peds: &[Agent], cones: &[ConeResult]) -> bool {
    peds.iter().zip(cones).all(|(ped, cone)| match cone {
        ConeResult::Overlap => false,
        ConeResult::Cone(c) => !interval_contains(&c.interval, relative_velocity_angle(speed, heading, ped.velocity)),
    })
}

/// Deterministic core of the search over a given sample set.
pub fn search_heading_over(
    goal_heading: f64,
    robot_radius: f64,
    peds: &[Agent],
    speed: f64,
    samples: &[f64],
    fallback: f64,
) -> f64 {
    if peds.is_empty() {
        return goal_heading;
    }
    let robot = Agent { position: Vec2::ZERO, velocity: Vec2::ZERO, radius: robot_radius };
    let cones: Vec<ConeResult> = peds.iter().enumerate().map(|(i, p)| collision_cone_with_id(&robot, p, i)).collect();
    let mut best = fallback;
    let mut best_gap = f64::INFINITY;
    for &u in samples {
        if !heading_is_free(u, speed, peds, &cones) {
            continue;
        }
        let gap = wrap_finite(u - goal_heading).abs();
        if gap < best_gap {
            best_gap = gap;
            best = u;
        }
    }
    best
}

/// Samples candidate headings and returns the free one closest to
/// `goal_heading`. With no pedestrians the goal heading itself is returned;
/// with every sample blocked, `cfg.fallback_heading`.
pub fn search_desired_heading<R: Rng + ?Sized>(
    goal_heading: f64,
    robot_radius: f64,
    peds: &[Agent],
    speed: f64,
    cfg: &HeadingSearchConfig,
    rng: &mut R,
) -> f64 {
    assert!(cfg.samples >= 1, "heading search needs at least one sample");
    if peds.is_empty() {
        return goal_heading;
    }
    let samples = sample_headings(cfg.samples, cfg.mode, rng);
    search_heading_over(goal_heading, robot_radius, peds, speed, &samples, cfg.fallback_heading)
}

/// Commanded speed as used by the search.
pub fn search_speed(commanded: f64) -> f64 {
    commanded.max(MIN_SEARCH_SPEED)
}
