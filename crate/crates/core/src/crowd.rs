//! Social-force pedestrian dynamics with an extra repulsion term that pushes
//! pedestrians away from the robot.
//!
//! Every repulsion uses the circular exponential law
//! `A * exp((r_sum - d) / B) * n`, where `d` is the center distance (or the
//! surface distance for static obstacles) and `n` points away from the
//! source. Pedestrians have unit mass, so forces are accelerations.

use serde::{Deserialize, Serialize};

use crate::geometry::{Vec2, Velocity2D};
use crate::world::OccupancyGrid;

/// Speed cap as a multiple of the desired speed.
pub const MAX_SPEED_FACTOR: f64 = 1.3;
/// Distance at which a pedestrian switches to its next waypoint.
pub const WAYPOINT_TOLERANCE: f64 = 0.5;
/// Static obstacles further than this exert no force.
const OBSTACLE_SEARCH_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Velocity2D,
    pub radius: f64,
    pub desired_speed: f64,
    /// Cyclic list of waypoints.
    pub waypoints: Vec<Vec2>,
    pub waypoint_index: usize,
}

impl Pedestrian {
    pub fn new(id: u32, position: Vec2, radius: f64, desired_speed: f64, waypoints: Vec<Vec2>) -> Self {
        Self { id, position, velocity: Vec2::ZERO, radius, desired_speed, waypoints, waypoint_index: 0 }
    }

    /// Current target; a pedestrian without waypoints targets where it stands.
    pub fn current_waypoint(&self) -> Vec2 {
        self.waypoints.get(self.waypoint_index).copied().unwrap_or(self.position)
    }

    pub fn max_speed(&self) -> f64 {
        MAX_SPEED_FACTOR * self.desired_speed
    }

    fn advance_waypoint(&mut self) {
        if !self.waypoints.is_empty() && self.position.distance(self.current_waypoint()) < WAYPOINT_TOLERANCE {
            self.waypoint_index = (self.waypoint_index + 1) % self.waypoints.len();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocialForceParams {
    pub relaxation_time: f64,
    pub ped_repulsion_strength: f64,
    pub ped_repulsion_range: f64,
    pub obs_repulsion_strength: f64,
    pub obs_repulsion_range: f64,
    pub robot_repulsion_strength: f64,
    pub robot_repulsion_range: f64,
}

impl Default for SocialForceParams {
    fn default() -> Self {
        Self {
            relaxation_time: 0.5,
            ped_repulsion_strength: 2.0,
            ped_repulsion_range: 0.3,
            obs_repulsion_strength: 10.0,
            obs_repulsion_range: 0.2,
            robot_repulsion_strength: 4.0,
            robot_repulsion_range: 0.5,
        }
    }
}

impl SocialForceParams {
    /// Checks positivity. `A_rob > A_per` is the intended regime but is not
    /// enforced, so ablations can switch the robot term off.
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("relaxation_time", self.relaxation_time),
            ("ped_repulsion_strength", self.ped_repulsion_strength),
            ("ped_repulsion_range", self.ped_repulsion_range),
            ("obs_repulsion_strength", self.obs_repulsion_strength),
            ("obs_repulsion_range", self.obs_repulsion_range),
            ("robot_repulsion_range", self.robot_repulsion_range),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.robot_repulsion_strength >= 0.0) {
            return Err("robot_repulsion_strength must be non-negative".into());
        }
        Ok(())
    }
}

/// The robot as seen by the crowd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotDisc {
    pub position: Vec2,
    pub radius: f64,
}

/// Per-term force on one pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceBreakdown {
    pub desired: Vec2,
    pub obstacle: Vec2,
    pub pedestrian: Vec2,
    pub robot: Vec2,
}

impl ForceBreakdown {
    pub fn total(&self) -> Vec2 {
        self.desired + self.obstacle + self.pedestrian + self.robot
    }
}

fn exp_repulsion(strength: f64, range: f64, overlap_margin: f64, away: Vec2) -> Vec2 {
    away * (strength * (overlap_margin / range).exp())
}

pub fn compute_social_force(
    p: &Pedestrian,
    others: &[Pedestrian],
    grid: &OccupancyGrid,
    robot: Option<RobotDisc>,
    params: &SocialForceParams,
) -> ForceBreakdown {
    let to_goal = p.current_waypoint() - p.position;
    let desired = (to_goal.normalized_or_zero() * p.desired_speed - p.velocity) * (1.0 / params.relaxation_time);

    let mut pedestrian = Vec2::ZERO;
    for q in others.iter().filter(|q| q.id != p.id) {
        let diff = p.position - q.position;
        let d = diff.norm();
        let away = if d > 0.0 {
            diff * (1.0 / d)
        } else {
            // Coincident agents: separate deterministically by id.
            Vec2::new(if p.id < q.id { -1.0 } else { 1.0 }, 0.0)
        };
        pedestrian +=
            exp_repulsion(params.ped_repulsion_strength, params.ped_repulsion_range, p.radius + q.radius - d, away);
    }

    let obstacle = grid
        .nearest_occupied(p.position, OBSTACLE_SEARCH_RADIUS)
        .map(|(d, away)| exp_repulsion(params.obs_repulsion_strength, params.obs_repulsion_range, p.radius - d, away))
        .unwrap_or(Vec2::ZERO);

    let robot = robot
        .map(|r| {
            let diff = p.position - r.position;
            let d = diff.norm();
            exp_repulsion(
                params.robot_repulsion_strength,
                params.robot_repulsion_range,
                p.radius + r.radius - d,
                diff.normalized_or_zero(),
            )
        })
        .unwrap_or(Vec2::ZERO);

    ForceBreakdown { desired, obstacle, pedestrian, robot }
}

/// Scales `v` down to at most `cap` in magnitude.
fn clamp_speed(v: Vec2, cap: f64) -> Vec2 {
    let n = v.norm();
    if n <= cap {
        return v;
    }
    let mut out = v * (cap / n);
    // Rounding can leave the rescaled vector one ulp above the cap.
    while out.norm() > cap {
        out = out * (1.0 - f64::EPSILON);
    }
    out
}

/// Advances the crowd by one semi-implicit Euler step. Forces are evaluated
/// on the pre-step state for every pedestrian before any of them moves.
pub fn step_crowd(
    peds: &mut [Pedestrian],
    grid: &OccupancyGrid,
    robot: Option<RobotDisc>,
    params: &SocialForceParams,
    dt: f64,
) {
    assert!(dt > 0.0 && dt <= 0.1, "crowd step dt must lie in (0, 0.1], got {dt}");
    let forces: Vec<Vec2> = peds.iter().map(|p| compute_social_force(p, peds, grid, robot, params).total()).collect();
    for (p, f) in peds.iter_mut().zip(forces) {
        p.velocity = clamp_speed(p.velocity + f * dt, p.max_speed());
        p.position += p.velocity * dt;
        p.advance_waypoint();
    }
}
