//! Four-term navigation reward: goal progress, collision proximity,
//! rotation smoothness and alignment with the desired heading.

use std::f64::consts::FRAC_PI_6;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    pub r_goal: f64,
    pub r_path: f64,
    /// Goal tolerance (m).
    pub g_m: f64,
    /// Per-leg time limit (s).
    pub t_max: f64,
    pub r_collision: f64,
    pub r_obstacle: f64,
    /// Collision distance (m).
    pub d_r: f64,
    /// Proximity penalty onset (m).
    pub d_m: f64,
    pub r_rotation: f64,
    /// Rotation speed above which turning is penalized (rad/s).
    pub omega_m: f64,
    pub r_angle: f64,
    /// Heading deviation at which the alignment term crosses zero (rad).
    pub theta_m: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            r_goal: 20.0,
            r_path: 3.2,
            g_m: 0.3,
            t_max: 25.0,
            r_collision: -20.0,
            r_obstacle: -0.2,
            d_r: 0.3,
            d_m: 1.2,
            r_rotation: -0.1,
            omega_m: 1.0,
            r_angle: 0.6,
            theta_m: FRAC_PI_6,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.g_m < self.d_m) {
            return Err(format!("goal tolerance {} must be below d_m {}", self.g_m, self.d_m));
        }
        if !(self.d_r <= self.d_m) {
            return Err(format!("d_r {} must not exceed d_m {}", self.d_r, self.d_m));
        }
        if !(self.theta_m > 0.0 && self.theta_m <= std::f64::consts::PI) {
            return Err(format!("theta_m {} must lie in (0, pi]", self.theta_m));
        }
        if !(self.t_max > 0.0) {
            return Err("t_max must be positive".into());
        }
        Ok(())
    }
}

pub fn reward_goal(dist_now: f64, dist_prev: f64, t: f64, p: &RewardParams) -> f64 {
    if dist_now < p.g_m {
        p.r_goal
    } else if t >= p.t_max {
        -p.r_goal
    } else {
        p.r_path * (dist_prev - dist_now)
    }
}

pub fn reward_collision(obstacle_dist: f64, p: &RewardParams) -> f64 {
    if obstacle_dist <= p.d_r {
        p.r_collision
    } else if obstacle_dist <= p.d_m {
        p.r_obstacle * (p.d_m - obstacle_dist)
    } else {
        0.0
    }
}

pub fn reward_smoothness(omega: f64, p: &RewardParams) -> f64 {
    if omega.abs() > p.omega_m {
        p.r_rotation * omega.abs()
    } else {
        0.0
    }
}

pub fn reward_heading(desired_heading: f64, p: &RewardParams) -> f64 {
    p.r_angle * (p.theta_m - desired_heading.abs())
}

/// Per-step inputs to the reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardInputs {
    pub goal_dist_now: f64,
    pub goal_dist_prev: f64,
    /// Time since the current leg started (s).
    pub t: f64,
    /// Distance from the robot center to the nearest obstacle surface (m).
    pub obstacle_dist: f64,
    pub omega: f64,
    pub desired_heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Collision,
    Goal,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_g: f64,
    pub r_c: f64,
    pub r_w: f64,
    pub r_d: f64,
    pub total: f64,
    pub goal_reached: bool,
    pub timed_out: bool,
    pub collided: bool,
}

impl RewardBreakdown {
    /// Terminal label with precedence collision > goal > timeout.
    pub fn terminal(&self) -> Option<Terminal> {
        if self.collided {
            Some(Terminal::Collision)
        } else if self.goal_reached {
            Some(Terminal::Goal)
        } else if self.timed_out {
            Some(Terminal::Timeout)
        } else {
            None
        }
    }
}

pub fn reward_total(inputs: &RewardInputs, p: &RewardParams) -> RewardBreakdown {
    let r_g = reward_goal(inputs.goal_dist_now, inputs.goal_dist_prev, inputs.t, p);
    let r_c = reward_collision(inputs.obstacle_dist, p);
    let r_w = reward_smoothness(inputs.omega, p);
    let r_d = reward_heading(inputs.desired_heading, p);
    RewardBreakdown {
        r_g,
        r_c,
        r_w,
        r_d,
        total: r_g + r_c + r_w + r_d,
        goal_reached: inputs.goal_dist_now < p.g_m,
        timed_out: inputs.t >= p.t_max,
        collided: inputs.obstacle_dist <= p.d_r,
    }
}
