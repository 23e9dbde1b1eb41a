//! Static environment: occupancy grid, lidar simulation, and the global
//! grid planner that produces the nominal path.

mod mapfile;
mod planner;
mod raycast;

pub use mapfile::{load_map, parse_pgm, save_map, write_pgm, MapSidecar};
pub use planner::{astar_cells, inflate, plan_global_path, segment_clear, GridPath};
pub use raycast::{
    nearest_obstacle_distance, ray_circle_distance, ray_grid_distance, raycast_scan, Disc, LidarConfig, LidarScan,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{from_robot_frame, to_robot_frame, Pose2D, Vec2};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid lidar config: {0}")]
    InvalidLidar(String),
    #[error("sensor at ({x:.3}, {y:.3}) is outside the map")]
    SensorOutsideMap { x: f64, y: f64 },
    #[error("no path from start to goal")]
    Unreachable,
    #[error("map file error: {0}")]
    MapFile(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Integer cell address, column first.
pub type Cell = (usize, usize);

/// Binary occupancy map. Row 0 is the row with the smallest y in the map
/// frame; cells are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    resolution: f64,
    width: usize,
    height: usize,
    origin: Pose2D,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(
        resolution: f64,
        width: usize,
        height: usize,
        origin: Pose2D,
        cells: Vec<bool>,
    ) -> Result<Self, WorldError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(WorldError::InvalidGrid(format!("resolution {resolution} must be > 0")));
        }
        if width == 0 || height == 0 {
            return Err(WorldError::InvalidGrid("grid must have at least one cell".into()));
        }
        if cells.len() != width * height {
            return Err(WorldError::InvalidGrid(format!("cells length {} != {width} x {height}", cells.len())));
        }
        if !origin.is_finite() {
            return Err(WorldError::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { resolution, width, height, origin, cells })
    }

    /// All-free grid.
    pub fn empty(resolution: f64, width: usize, height: usize, origin: Pose2D) -> Result<Self, WorldError> {
        Self::new(resolution, width, height, origin, vec![false; width * height])
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> Pose2D {
        self.origin
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// Extent in meters along the map's own axes.
    pub fn size_m(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.cells[cell.1 * self.width + cell.0]
    }

    pub fn set_occupied(&mut self, cell: Cell, occupied: bool) {
        let w = self.width;
        self.cells[cell.1 * w + cell.0] = occupied;
    }

    /// Grid-frame continuous coordinates in cell units.
    pub(crate) fn world_to_grid_units(&self, p: Vec2) -> Vec2 {
        to_robot_frame(p, &self.origin) * (1.0 / self.resolution)
    }

    pub(crate) fn grid_units_to_world(&self, g: Vec2) -> Vec2 {
        from_robot_frame(g * self.resolution, &self.origin)
    }

    pub fn world_to_cell(&self, p: Vec2) -> Option<Cell> {
        let g = self.world_to_grid_units(p);
        if g.x < 0.0 || g.y < 0.0 {
            return None;
        }
        let (cx, cy) = (g.x.floor() as usize, g.y.floor() as usize);
        (cx < self.width && cy < self.height).then_some((cx, cy))
    }

    pub fn cell_center(&self, cell: Cell) -> Vec2 {
        self.grid_units_to_world(Vec2::new(cell.0 as f64 + 0.5, cell.1 as f64 + 0.5))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.world_to_cell(p).is_some()
    }

    /// Occupancy at a world point; points outside the map count as free.
    pub fn occupied_at(&self, p: Vec2) -> bool {
        self.world_to_cell(p).is_some_and(|c| self.is_occupied(c))
    }

    /// Fills every cell whose center lies inside the axis-aligned box.
    pub fn fill_rect(&mut self, min: Vec2, max: Vec2) {
        self.fill_where(|c| c.x >= min.x && c.x <= max.x && c.y >= min.y && c.y <= max.y);
    }

    /// Fills every cell whose center lies inside the disc.
    pub fn fill_disc(&mut self, center: Vec2, radius: f64) {
        self.fill_where(|c| c.distance(center) <= radius);
    }

    fn fill_where(&mut self, pred: impl Fn(Vec2) -> bool) {
        for cy in 0..self.height {
            for cx in 0..self.width {
                if pred(self.cell_center((cx, cy))) {
                    self.set_occupied((cx, cy), true);
                }
            }
        }
    }

    /// Distance from `p` to the surface of the nearest occupied cell within
    /// `search_radius`, with the unit direction pointing from that surface
    /// toward `p`. Returns `None` when nothing is within range.
    pub fn nearest_occupied(&self, p: Vec2, search_radius: f64) -> Option<(f64, Vec2)> {
        let g = self.world_to_grid_units(p);
        let reach = (search_radius / self.resolution).ceil() as i64 + 1;
        let (gx, gy) = (g.x.floor() as i64, g.y.floor() as i64);
        let mut best: Option<(f64, Vec2)> = None;
        for cy in (gy - reach).max(0)..=(gy + reach).min(self.height as i64 - 1) {
            for cx in (gx - reach).max(0)..=(gx + reach).min(self.width as i64 - 1) {
                if !self.is_occupied((cx as usize, cy as usize)) {
                    continue;
                }
                let nearest = Vec2::new(g.x.clamp(cx as f64, cx as f64 + 1.0), g.y.clamp(cy as f64, cy as f64 + 1.0));
                let d = (g - nearest).norm() * self.resolution;
                if d <= search_radius && best.is_none_or(|(bd, _)| d < bd) {
                    let away = if d > 0.0 {
                        (g - nearest).normalized_or_zero()
                    } else {
                        (g - Vec2::new(cx as f64 + 0.5, cy as f64 + 0.5)).normalized_or_zero()
                    };
                    best = Some((d, away.rotated(self.origin.heading)));
                }
            }
        }
        best
    }
}
