//! Planar geometry shared by the simulator: points, poses, frame transforms
//! and wrap-aware angle arithmetic.
//!
//! Convention: x forward, y left, angles counterclockwise positive, so that
//! `atan2(y, x) == 0` is straight ahead of the robot.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite angle: {0}")]
    NonFiniteAngle(f64),
    #[error("invalid angular interval half width {0} (must lie in [0, pi])")]
    InvalidHalfWidth(f64),
}

/// A point or free vector in the plane, in meters (or m/s when used as a
/// velocity).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// Velocities share the vector representation.
pub type Velocity2D = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(radius * c, radius * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    pub fn normalized_or_zero(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    /// Counterclockwise rotation by `angle`.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Position plus heading. The heading is kept wrapped into (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    /// Builds a pose, wrapping the heading. Non-finite headings are kept as
    /// given so callers can detect them with [`Pose2D::is_finite`].
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        let heading = wrap_angle(heading).unwrap_or(heading);
        Self { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> Result<f64, GeometryError> {
    if !a.is_finite() {
        return Err(GeometryError::NonFiniteAngle(a));
    }
    Ok(wrap_finite(a))
}

/// Infallible variant for angles already known to be finite. Non-finite
/// input yields NaN.
pub fn wrap_finite(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Expresses a global point in the robot's local frame.
pub fn to_robot_frame(global: Vec2, robot_pose: &Pose2D) -> Vec2 {
    (global - robot_pose.position()).rotated(-robot_pose.heading)
}

/// Inverse of [`to_robot_frame`].
pub fn from_robot_frame(local: Vec2, robot_pose: &Pose2D) -> Vec2 {
    local.rotated(robot_pose.heading) + robot_pose.position()
}

/// Expresses a global pose in the robot's local frame.
pub fn pose_to_robot_frame(global: &Pose2D, robot_pose: &Pose2D) -> Pose2D {
    let p = to_robot_frame(global.position(), robot_pose);
    Pose2D::new(p.x, p.y, global.heading - robot_pose.heading)
}

pub fn pose_from_robot_frame(local: &Pose2D, robot_pose: &Pose2D) -> Pose2D {
    let p = from_robot_frame(local.position(), robot_pose);
    Pose2D::new(p.x, p.y, local.heading + robot_pose.heading)
}

/// Rotates a free vector (e.g. a velocity) into the robot frame. Unlike
/// points, vectors ignore the robot's translation.
pub fn vector_to_robot_frame(v: Vec2, robot_pose: &Pose2D) -> Vec2 {
    v.rotated(-robot_pose.heading)
}

/// Closed angular interval `[center - half_width, center + half_width]` on
/// the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularInterval {
    center: f64,
    half_width: f64,
}

impl AngularInterval {
    pub fn new(center: f64, half_width: f64) -> Result<Self, GeometryError> {
        let center = wrap_angle(center)?;
        if !(0.0..=PI).contains(&half_width) {
            return Err(GeometryError::InvalidHalfWidth(half_width));
        }
        Ok(Self { center, half_width })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Signed distance of `a` from the nearest interval boundary, negative
    /// inside.
    pub fn boundary_distance(&self, a: f64) -> f64 {
        wrap_finite(a - self.center).abs() - self.half_width
    }
}

/// Wrap-aware membership test.
pub fn interval_contains(iv: &AngularInterval, a: f64) -> bool {
    wrap_finite(a - iv.center).abs() <= iv.half_width
}
