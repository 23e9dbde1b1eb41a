//! Independent reference implementations used as test oracles. Written
//! without calling the library code they check.
#![allow(dead_code)]

pub mod fixtures;

use std::collections::BinaryHeap;
use std::f64::consts::{PI, SQRT_2};

/// Reward term values and terminal flags, transcribed branch by branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReward {
    pub goal: f64,
    pub goal_branch: u8,
    pub collision: f64,
    pub collision_branch: u8,
    pub smooth: f64,
    pub smooth_branch: u8,
    pub heading: f64,
}

/// Default constants, restated rather than imported.
pub const R_GOAL: f64 = 20.0;
pub const R_PATH: f64 = 3.2;
pub const G_M: f64 = 0.3;
pub const T_MAX: f64 = 25.0;
pub const R_COLLISION: f64 = -20.0;
pub const R_OBSTACLE: f64 = -0.2;
pub const D_R: f64 = 0.3;
pub const D_M: f64 = 1.2;
pub const R_ROTATION: f64 = -0.1;
pub const OMEGA_M: f64 = 1.0;
pub const R_ANGLE: f64 = 0.6;
pub const THETA_M: f64 = std::f64::consts::FRAC_PI_6;

pub fn oracle_reward(now: f64, prev: f64, t: f64, obstacle: f64, omega: f64, theta_d: f64) -> OracleReward {
    let (goal, goal_branch) = match () {
        _ if now < G_M => (R_GOAL, 0),
        _ if t >= T_MAX => (-R_GOAL, 1),
        _ => (R_PATH * (prev - now), 2),
    };
    let (collision, collision_branch) = if obstacle <= D_R {
        (R_COLLISION, 0)
    } else if obstacle <= D_M {
        (R_OBSTACLE * (D_M - obstacle), 1)
    } else {
        (0.0, 2)
    };
    let w = omega.abs();
    let (smooth, smooth_branch) = if w > OMEGA_M { (R_ROTATION * w, 0) } else { (0.0, 1) };
    let heading = R_ANGLE * (THETA_M - theta_d.abs());
    OracleReward { goal, goal_branch, collision, collision_branch, smooth, smooth_branch, heading }
}

/// Constant-velocity forward simulation of two discs. Returns true if they
/// come within `r_sum` during `horizon` seconds.
pub fn discs_collide(
    pa: (f64, f64),
    va: (f64, f64),
    pb: (f64, f64),
    vb: (f64, f64),
    r_sum: f64,
    horizon: f64,
    dt: f64,
) -> bool {
    let steps = (horizon / dt).round() as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let dx = (pb.0 + vb.0 * t) - (pa.0 + va.0 * t);
        let dy = (pb.1 + vb.1 * t) - (pa.1 + va.1 * t);
        if dx * dx + dy * dy <= r_sum * r_sum {
            return true;
        }
    }
    false
}

/// Cone membership by dot products: the relative velocity of a robot at the
/// origin moving at `speed` along `heading` points into the disc of radius
/// `r_sum` around `p` (which lies outside it).
pub fn heading_blocked(heading: f64, speed: f64, p: (f64, f64), v: (f64, f64), r_sum: f64) -> bool {
    let mut u = (speed * heading.cos() - v.0, speed * heading.sin() - v.1);
    if u.0 == 0.0 && u.1 == 0.0 {
        u = (1.0, 0.0);
    }
    let un = (u.0 * u.0 + u.1 * u.1).sqrt();
    let pn = (p.0 * p.0 + p.1 * p.1).sqrt();
    let cos_angle = (u.0 * p.0 + u.1 * p.1) / (un * pn);
    let half = (r_sum / pn).asin();
    cos_angle >= half.cos()
}

/// Pedestrian as `(position, velocity, radius)`.
pub type OraclePed = ((f64, f64), (f64, f64), f64);

/// Replays the heading search over a recorded sample set.
pub fn oracle_heading(goal: f64, samples: &[f64], speed: f64, peds: &[OraclePed], robot_radius: f64) -> f64 {
    if peds.is_empty() {
        return goal;
    }
    let overlap = peds.iter().any(|(p, _, r)| (p.0 * p.0 + p.1 * p.1).sqrt() <= robot_radius + r);
    let mut best: Option<(f64, f64)> = None;
    if !overlap {
        for &u in samples {
            if peds.iter().any(|(p, v, r)| heading_blocked(u, speed, *p, *v, robot_radius + r)) {
                continue;
            }
            let mut d = (u - goal) % (2.0 * PI);
            if d > PI {
                d -= 2.0 * PI;
            } else if d <= -PI {
                d += 2.0 * PI;
            }
            if best.is_none_or(|(gap, _)| d.abs() < gap) {
                best = Some((d.abs(), u));
            }
        }
    }
    best.map_or(PI / 2.0, |(_, u)| u)
}

#[derive(Clone, Copy, PartialEq)]
struct Node(f64, usize);

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over an 8-connected grid with the same move rules as the
/// planner: no corner cutting, start and goal cells always passable. Cost
/// in cell units.
pub fn dijkstra_cost(blocked: &[bool], w: usize, h: usize, start: (usize, usize), goal: (usize, usize)) -> Option<f64> {
    let passable = |x: usize, y: usize| (x, y) == start || (x, y) == goal || !blocked[y * w + x];
    let mut dist = vec![f64::INFINITY; w * h];
    let mut heap = BinaryHeap::new();
    dist[start.1 * w + start.0] = 0.0;
    heap.push(Node(0.0, start.1 * w + start.0));
    while let Some(Node(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let (x, y) = (i % w, i / w);
        if (x, y) == goal {
            return Some(d);
        }
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if !passable(nx, ny) {
                    continue;
                }
                if dx != 0 && dy != 0 && (!passable(nx, y) || !passable(x, ny)) {
                    continue;
                }
                let nd = d + if dx != 0 && dy != 0 { SQRT_2 } else { 1.0 };
                let j = ny * w + nx;
                if nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Node(nd, j));
                }
            }
        }
    }
    None
}
