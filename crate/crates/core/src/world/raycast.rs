use serde::{Deserialize, Serialize};

use super::{OccupancyGrid, WorldError};
use crate::geometry::{Pose2D, Vec2};

/// Planar lidar parameters. Beams are spaced `angular_resolution` apart
/// starting at `-fov / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub range_min: f64,
    pub range_max: f64,
    pub fov: f64,
    pub angular_resolution: f64,
    pub rate: f64,
}

impl LidarConfig {
    /// Hokuyo UTM-30LX: 0.1-30 m, 270 degree FOV, 0.25 degree steps, 20 Hz.
    pub fn hokuyo_utm30lx() -> Self {
        Self {
            range_min: 0.1,
            range_max: 30.0,
            fov: 270f64.to_radians(),
            angular_resolution: 0.25f64.to_radians(),
            rate: 20.0,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.range_min > 0.0 && self.range_min < self.range_max && self.range_max.is_finite()) {
            return Err(WorldError::InvalidLidar(format!(
                "need 0 < range_min < range_max, got [{}, {}]",
                self.range_min, self.range_max
            )));
        }
        if !(self.fov > 0.0 && self.angular_resolution > 0.0) {
            return Err(WorldError::InvalidLidar("fov and resolution must be positive".into()));
        }
        let beams = self.fov / self.angular_resolution;
        if (beams - beams.round()).abs() > 1e-6 {
            return Err(WorldError::InvalidLidar(format!(
                "fov / angular_resolution = {beams} is not an integer beam count"
            )));
        }
        if !(self.rate > 0.0) {
            return Err(WorldError::InvalidLidar("rate must be positive".into()));
        }
        Ok(())
    }

    pub fn beam_count(&self) -> usize {
        (self.fov / self.angular_resolution).round() as usize
    }

    /// Bearing of beam `i` in the sensor frame.
    pub fn beam_angle(&self, i: usize) -> f64 {
        -self.fov / 2.0 + i as f64 * self.angular_resolution
    }
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self::hokuyo_utm30lx()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarScan {
    pub ranges: Vec<f64>,
    pub timestamp: f64,
}

impl LidarScan {
    pub fn with_timestamp(mut self, t: f64) -> Self {
        self.timestamp = t;
        self
    }
}

/// Circular dynamic obstacle seen by the lidar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Vec2,
    pub radius: f64,
}

/// Distance along a unit ray to the first occupied cell, or `None` if the
/// ray leaves the map or exceeds `max_range` first. Grid traversal is the
/// Amanatides-Woo DDA, so hits are exact cell-boundary crossings.
pub fn ray_grid_distance(grid: &OccupancyGrid, origin: Vec2, angle: f64, max_range: f64) -> Option<f64> {
    let res = grid.resolution();
    let o = grid.world_to_grid_units(origin);
    let dir = Vec2::from_polar(1.0, angle - grid.origin().heading);
    let max_t = max_range / res;

    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let mut cx = o.x.floor() as i64;
    let mut cy = o.y.floor() as i64;
    if cx < 0 || cy < 0 || cx >= w || cy >= h {
        return None;
    }
    if grid.is_occupied((cx as usize, cy as usize)) {
        return Some(0.0);
    }

    let step_x: i64 = if dir.x > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dir.y > 0.0 { 1 } else { -1 };
    let t_delta_x = if dir.x != 0.0 { (1.0 / dir.x).abs() } else { f64::INFINITY };
    let t_delta_y = if dir.y != 0.0 { (1.0 / dir.y).abs() } else { f64::INFINITY };
    let mut t_max_x = if dir.x > 0.0 {
        (cx as f64 + 1.0 - o.x) / dir.x
    } else if dir.x < 0.0 {
        (o.x - cx as f64) / -dir.x
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dir.y > 0.0 {
        (cy as f64 + 1.0 - o.y) / dir.y
    } else if dir.y < 0.0 {
        (o.y - cy as f64) / -dir.y
    } else {
        f64::INFINITY
    };

    loop {
        let t = if t_max_x < t_max_y {
            cx += step_x;
            let t = t_max_x;
            t_max_x += t_delta_x;
            t
        } else {
            cy += step_y;
            let t = t_max_y;
            t_max_y += t_delta_y;
            t
        };
        if t > max_t || cx < 0 || cy < 0 || cx >= w || cy >= h {
            return None;
        }
        if grid.is_occupied((cx as usize, cy as usize)) {
            return Some(t * res);
        }
    }
}

/// Distance along a unit ray to a disc surface. A ray starting inside the
/// disc hits at distance 0.
pub fn ray_circle_distance(origin: Vec2, angle: f64, disc: &Disc) -> Option<f64> {
    let d = Vec2::from_polar(1.0, angle);
    let f = origin - disc.center;
    let b = f.dot(d);
    let c = f.norm_squared() - disc.radius * disc.radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc_sq = b * b - c;
    if disc_sq < 0.0 {
        return None;
    }
    let t = -b - disc_sq.sqrt();
    (t >= 0.0).then_some(t)
}

/// Simulates one lidar sweep against the static grid and dynamic discs.
pub fn raycast_scan(
    grid: &OccupancyGrid,
    sensor_pose: &Pose2D,
    cfg: &LidarConfig,
    dynamic_obstacles: &[Disc],
) -> Result<LidarScan, WorldError> {
    cfg.validate()?;
    let origin = sensor_pose.position();
    if !origin.is_finite() || !grid.contains(origin) {
        return Err(WorldError::SensorOutsideMap { x: origin.x, y: origin.y });
    }
    let nearby: Vec<&Disc> =
        dynamic_obstacles.iter().filter(|d| d.center.distance(origin) - d.radius <= cfg.range_max).collect();

    let ranges = (0..cfg.beam_count())
        .map(|i| {
            let angle = sensor_pose.heading + cfg.beam_angle(i);
            let mut r = ray_grid_distance(grid, origin, angle, cfg.range_max).unwrap_or(cfg.range_max);
            for disc in &nearby {
                if let Some(t) = ray_circle_distance(origin, angle, disc) {
                    r = r.min(t);
                }
            }
            r.clamp(cfg.range_min, cfg.range_max)
        })
        .collect();
    Ok(LidarScan { ranges, timestamp: 0.0 })
}

/// Closest return in the scan.
pub fn nearest_obstacle_distance(scan: &LidarScan) -> f64 {
    scan.ranges.iter().copied().fold(f64::INFINITY, f64::min)
}
