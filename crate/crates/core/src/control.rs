//! Action space handling, unicycle kinematics and the reference
//! VO-steering controller.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_finite, Pose2D};
use crate::observation::ScaleBounds;

pub const OMEGA_MAX: f64 = 2.0;
pub const TURTLEBOT_V_MAX: f64 = 0.5;
pub const DEFAULT_STEERING_GAIN: f64 = 2.0;

/// Velocity command in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub v_x: f64,
    pub omega_z: f64,
}

impl Action {
    pub fn clamped(self, v_max: f64) -> Action {
        Action { v_x: self.v_x.clamp(0.0, v_max), omega_z: self.omega_z.clamp(-OMEGA_MAX, OMEGA_MAX) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2D,
    pub v_x: f64,
    pub omega_z: f64,
    pub radius: f64,
}

impl RobotState {
    pub fn at_rest(pose: Pose2D, radius: f64) -> Self {
        Self { pose, v_x: 0.0, omega_z: 0.0, radius }
    }
}

fn action_bounds(v_max: f64) -> (ScaleBounds, ScaleBounds) {
    (ScaleBounds { min: 0.0, max: v_max }, ScaleBounds { min: -OMEGA_MAX, max: OMEGA_MAX })
}

/// Maps a normalized action in [-1, 1]^2 onto `[0, v_max] x [-2, 2]`.
/// Components are clamped into [-1, 1] first; NaN maps to -1.
pub fn denormalize_action(a: [f64; 2], v_max: f64) -> Action {
    let (v, w) = action_bounds(v_max);
    let clean = |x: f64| if x.is_nan() { -1.0 } else { x.clamp(-1.0, 1.0) };
    Action { v_x: v.unscale(clean(a[0])), omega_z: w.unscale(clean(a[1])) }
}

/// Inverse of [`denormalize_action`] on the valid box.
pub fn normalize_action(action: Action, v_max: f64) -> [f64; 2] {
    let (v, w) = action_bounds(v_max);
    [v.scale(action.v_x), w.scale(action.omega_z)]
}

/// Reference steering law: turn proportionally toward the desired heading,
/// slowing with the cosine of the heading error.
pub fn vo_steering_policy(desired_heading: f64, v_max_now: f64, gain: f64) -> Action {
    Action {
        v_x: v_max_now * desired_heading.cos().max(0.0),
        omega_z: (gain * desired_heading).clamp(-OMEGA_MAX, OMEGA_MAX),
    }
}

/// Speed limit that is fast in open space and slow near obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocitySwitch {
    pub threshold: f64,
    pub fast: f64,
    pub slow: f64,
}

impl Default for VelocitySwitch {
    fn default() -> Self {
        Self { threshold: 2.2, fast: 2.0, slow: 0.5 }
    }
}

impl VelocitySwitch {
    pub fn v_max(&self, obstacle_dist: f64) -> f64 {
        velocity_switch(obstacle_dist, self.threshold, self.fast, self.slow)
    }
}

pub fn velocity_switch(obstacle_dist: f64, threshold: f64, fast: f64, slow: f64) -> f64 {
    if obstacle_dist >= threshold {
        fast
    } else {
        slow
    }
}

/// Unicycle step with midpoint heading. The action is stored as given.
pub fn step_robot(state: &RobotState, action: Action, dt: f64) -> RobotState {
    assert!(dt > 0.0 && dt <= 0.1, "robot step dt must lie in (0, 0.1], got {dt}");
    let mid = state.pose.heading + 0.5 * action.omega_z * dt;
    let (s, c) = mid.sin_cos();
    RobotState {
        pose: Pose2D {
            x: state.pose.x + action.v_x * c * dt,
            y: state.pose.y + action.v_x * s * dt,
            heading: wrap_finite(state.pose.heading + action.omega_z * dt),
        },
        v_x: action.v_x,
        omega_z: action.omega_z,
        radius: state.radius,
    }
}
