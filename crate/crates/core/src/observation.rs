//! Observation encoding: the pooled lidar history grid, the pedestrian
//! velocity grids, and the pure-pursuit sub-goal, all Max-Abs scaled into
//! [-1, 1].
//!
//! Lidar grid layout (80 x 80, row-major): scans are ordered oldest first,
//! each scan contributes its min-pooled row followed by its avg-pooled row,
//! giving a 20-row block that is repeated four times vertically. Column 0
//! is the rightmost beam group.
//!
//! Pedestrian grids cover 20 m ahead by 20 m across in 0.25 m cells; row 0
//! is the leftmost strip (y = +10 m), column 0 is nearest the robot.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{to_robot_frame, Pose2D, Vec2};
use crate::perception::TrackedPedestrian;
use crate::world::LidarScan;

pub const GRID_SIZE: usize = 80;
pub const GRID_CELLS: usize = GRID_SIZE * GRID_SIZE;
pub const HISTORY_LEN: usize = 10;
pub const STACK_COUNT: usize = 4;
pub const PED_CELL_SIZE: f64 = 0.25;
pub const PED_AREA_LENGTH: f64 = 20.0;
pub const PED_AREA_HALF_WIDTH: f64 = 10.0;
pub const PED_VELOCITY_BOUND: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservationError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sub-goal requested on an empty path")]
    EmptyPath,
}

/// How beams are split into pooling groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingLayout {
    /// Equal group sizes; the beam count must divide evenly.
    Even,
    /// Group `g` spans beams `floor(g n / G) .. floor((g + 1) n / G)`; for
    /// n = 13.5 G this alternates 13 and 14 beams.
    Alternating,
}

/// Contiguous block of beams fed to the pooling stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LidarSector {
    pub start_beam: usize,
    pub beam_count: usize,
    pub layout: PoolingLayout,
}

impl LidarSector {
    /// Front 180 degrees of a 1080-beam, 270 degree scan.
    pub fn turtlebot() -> Self {
        Self { start_beam: 180, beam_count: 720, layout: PoolingLayout::Even }
    }

    /// The whole 270 degree scan.
    pub fn barn() -> Self {
        Self { start_beam: 0, beam_count: 1080, layout: PoolingLayout::Alternating }
    }

    pub fn validate(&self, total_beams: usize) -> Result<(), ObservationError> {
        if self.start_beam + self.beam_count > total_beams {
            return Err(ObservationError::Config(format!(
                "sector [{}, {}) exceeds the {total_beams}-beam scan",
                self.start_beam,
                self.start_beam + self.beam_count
            )));
        }
        group_bounds(self.beam_count, GRID_SIZE, self.layout).map(|_| ())
    }
}

fn group_bounds(beams: usize, groups: usize, layout: PoolingLayout) -> Result<Vec<usize>, ObservationError> {
    if groups == 0 || beams < groups {
        return Err(ObservationError::Config(format!("cannot pool {beams} beams into {groups} groups")));
    }
    match layout {
        PoolingLayout::Even if !beams.is_multiple_of(groups) => {
            Err(ObservationError::Config(format!("{beams} beams do not divide into {groups} equal groups")))
        }
        PoolingLayout::Alternating if !(2 * beams).is_multiple_of(groups) || beams.is_multiple_of(groups) => {
            Err(ObservationError::Config(format!("{beams} beams cannot alternate into {groups} groups of k and k + 1")))
        }
        _ => Ok((0..=groups).map(|g| g * beams / groups).collect()),
    }
}

/// Min and mean of each beam group.
pub fn pool_scan(
    ranges: &[f64],
    groups: usize,
    layout: PoolingLayout,
) -> Result<(Vec<f64>, Vec<f64>), ObservationError> {
    let bounds = group_bounds(ranges.len(), groups, layout)?;
    let (mins, avgs) = bounds
        .windows(2)
        .map(|w| {
            let group = &ranges[w[0]..w[1]];
            let min = group.iter().copied().fold(f64::INFINITY, f64::min);
            let avg = group.iter().sum::<f64>() / group.len() as f64;
            (min, avg)
        })
        .unzip();
    Ok((mins, avgs))
}

/// The last ten scans, oldest first.
#[derive(Debug, Clone, Default)]
pub struct ScanHistoryBuffer {
    scans: VecDeque<LidarScan>,
}

impl ScanHistoryBuffer {
    pub fn new() -> Self {
        Self { scans: VecDeque::with_capacity(HISTORY_LEN) }
    }

    pub fn push(&mut self, scan: LidarScan) {
        if self.scans.len() == HISTORY_LEN {
            self.scans.pop_front();
        }
        self.scans.push_back(scan);
    }

    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.scans.len() == HISTORY_LEN
    }

    pub fn clear(&mut self) {
        self.scans.clear();
    }

    /// Exactly ten scans, oldest first, padding the front with the oldest
    /// scan during warm-up.
    pub fn padded(&self) -> Vec<&LidarScan> {
        let Some(oldest) = self.scans.front() else {
            return Vec::new();
        };
        std::iter::repeat_n(oldest, HISTORY_LEN - self.scans.len()).chain(self.scans.iter()).collect()
    }
}

/// 80 x 80 row-major grid of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid80(Vec<f64>);

impl Grid80 {
    pub fn zeros() -> Self {
        Self(vec![0.0; GRID_CELLS])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[row * GRID_SIZE + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.0[row * GRID_SIZE + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.0[row * GRID_SIZE..(row + 1) * GRID_SIZE]
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Lidar history grid in meters.
pub type LidarHistoryGrid = Grid80;

/// Pedestrian velocity grids in m/s, robot frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianGrids {
    pub vx: Grid80,
    pub vy: Grid80,
}

pub fn build_lidar_grid(buf: &ScanHistoryBuffer, sector: &LidarSector) -> Result<LidarHistoryGrid, ObservationError> {
    let scans = buf.padded();
    if scans.is_empty() {
        return Err(ObservationError::Config("lidar history is empty".into()));
    }
    let block_rows = 2 * HISTORY_LEN;
    let mut grid = Grid80::zeros();
    for (i, scan) in scans.iter().enumerate() {
        sector.validate(scan.ranges.len())?;
        let beams = &scan.ranges[sector.start_beam..sector.start_beam + sector.beam_count];
        let (mins, avgs) = pool_scan(beams, GRID_SIZE, sector.layout)?;
        for stack in 0..STACK_COUNT {
            let base = stack * block_rows + 2 * i;
            for col in 0..GRID_SIZE {
                grid.set(base, col, mins[col]);
                grid.set(base + 1, col, avgs[col]);
            }
        }
    }
    Ok(grid)
}

/// Cell for a robot-frame position, or `None` outside the covered area.
pub fn ped_cell(p: Vec2) -> Option<(usize, usize)> {
    if !(p.x >= 0.0 && p.x <= PED_AREA_LENGTH && p.y.abs() <= PED_AREA_HALF_WIDTH) {
        return None;
    }
    let max = GRID_SIZE - 1;
    let row = (((PED_AREA_HALF_WIDTH - p.y) / PED_CELL_SIZE).floor() as usize).min(max);
    let col = ((p.x / PED_CELL_SIZE).floor() as usize).min(max);
    Some((row, col))
}

/// Scatters track velocities into the grids; the nearest track wins a
/// contested cell.
pub fn build_ped_grids(tracks: &[TrackedPedestrian]) -> PedestrianGrids {
    let mut vx = Grid80::zeros();
    let mut vy = Grid80::zeros();
    let mut owner = vec![f64::INFINITY; GRID_CELLS];
    for t in tracks {
        let Some((row, col)) = ped_cell(t.rel_position) else {
            continue;
        };
        let d = t.rel_position.norm();
        let slot = &mut owner[row * GRID_SIZE + col];
        if d < *slot {
            *slot = d;
            vx.set(row, col, t.rel_velocity.x);
            vy.set(row, col, t.rel_velocity.y);
        }
    }
    PedestrianGrids { vx, vy }
}

/// Sub-goal in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGoal {
    pub rel_x: f64,
    pub rel_y: f64,
}

impl SubGoal {
    pub fn as_vec(&self) -> Vec2 {
        Vec2::new(self.rel_x, self.rel_y)
    }

    pub fn angle(&self) -> f64 {
        self.as_vec().angle()
    }
}

fn closest_on_segment(a: Vec2, b: Vec2, p: Vec2) -> (f64, Vec2) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (s, a + ab * s)
}

/// Pure-pursuit look-ahead point.
///
/// Projects the robot onto the path, then walks forward to the first point
/// at exactly `lookahead` from the robot. If the remaining path stays
/// inside that circle the final goal is returned; if the robot is already
/// further than `lookahead` from the path, the projection point is.
pub fn select_subgoal(path: &[Vec2], robot_pose: &Pose2D, lookahead: f64) -> Result<SubGoal, ObservationError> {
    let (&last, _) = path.split_last().ok_or(ObservationError::EmptyPath)?;
    if !(lookahead > 0.0) {
        return Err(ObservationError::Config(format!("lookahead must be positive, got {lookahead}")));
    }
    let robot = robot_pose.position();
    let to_local = |p: Vec2| {
        let l = to_robot_frame(p, robot_pose);
        SubGoal { rel_x: l.x, rel_y: l.y }
    };
    if path.len() == 1 {
        return Ok(to_local(last));
    }

    let mut best = (f64::INFINITY, 0usize, 0.0f64, path[0]);
    for (i, w) in path.windows(2).enumerate() {
        let (s, q) = closest_on_segment(w[0], w[1], robot);
        let d = q.distance(robot);
        if d < best.0 {
            best = (d, i, s, q);
        }
    }
    let (d0, seg0, s0, proj) = best;
    if d0 >= lookahead {
        return Ok(to_local(proj));
    }

    for (i, w) in path.windows(2).enumerate().skip(seg0) {
        let (a, b) = (w[0], w[1]);
        let ab = b - a;
        let qa = ab.norm_squared();
        if qa == 0.0 {
            continue;
        }
        let f = a - robot;
        let qb = 2.0 * f.dot(ab);
        let qc = f.norm_squared() - lookahead * lookahead;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            continue;
        }
        let s = (-qb + disc.sqrt()) / (2.0 * qa);
        let s_start = if i == seg0 { s0 } else { 0.0 };
        if (s_start..=1.0).contains(&s) {
            return Ok(to_local(a + ab * s));
        }
    }
    Ok(to_local(last))
}

/// Max-Abs scaling bounds for one observation component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleBounds {
    pub min: f64,
    pub max: f64,
}

impl ScaleBounds {
    pub fn new(min: f64, max: f64) -> Result<Self, ObservationError> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(ObservationError::Config(format!("degenerate scaling bounds [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn symmetric(bound: f64) -> Result<Self, ObservationError> {
        Self::new(-bound, bound)
    }

    /// `2 (o - min) / (max - min) - 1`, clamped to [-1, 1].
    pub fn scale(&self, o: f64) -> f64 {
        (2.0 * (o - self.min) / (self.max - self.min) - 1.0).clamp(-1.0, 1.0)
    }

    pub fn unscale(&self, s: f64) -> f64 {
        self.min + (s.clamp(-1.0, 1.0) + 1.0) * 0.5 * (self.max - self.min)
    }
}

/// Free-function form of [`ScaleBounds::scale`].
pub fn normalize(o: f64, min: f64, max: f64) -> Result<f64, ObservationError> {
    Ok(ScaleBounds::new(min, max)?.scale(o))
}

/// The normalized observation triplet, flattened row-major in f32.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub lidar: Vec<f32>,
    pub ped_vx: Vec<f32>,
    pub ped_vy: Vec<f32>,
    pub goal: [f32; 2],
}

impl Observation {
    pub const SHAPES: [(&'static str, [usize; 2]); 4] = [
        ("lidar", [GRID_SIZE, GRID_SIZE]),
        ("ped_vx", [GRID_SIZE, GRID_SIZE]),
        ("ped_vy", [GRID_SIZE, GRID_SIZE]),
        ("goal", [1, 2]),
    ];

    pub fn components(&self) -> [&[f32]; 4] {
        [&self.lidar, &self.ped_vx, &self.ped_vy, &self.goal]
    }

    /// True when every component has its declared size and every value
    /// lies in [-1, 1].
    pub fn is_well_formed(&self) -> bool {
        self.components()
            .iter()
            .zip(Self::SHAPES)
            .all(|(c, (_, [r, k]))| c.len() == r * k && c.iter().all(|v| (-1.0..=1.0).contains(v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub sector: LidarSector,
    pub lidar_bounds: ScaleBounds,
    pub ped_velocity_bound: f64,
    pub lookahead: f64,
    /// Zero the pedestrian grids (static-world deployments).
    pub suppress_pedestrians: bool,
}

impl EncoderConfig {
    pub fn turtlebot(range_min: f64, range_max: f64) -> Self {
        Self {
            sector: LidarSector::turtlebot(),
            lidar_bounds: ScaleBounds { min: range_min, max: range_max },
            ped_velocity_bound: PED_VELOCITY_BOUND,
            lookahead: 2.0,
            suppress_pedestrians: false,
        }
    }

    pub fn barn(range_min: f64, range_max: f64) -> Self {
        Self {
            sector: LidarSector::barn(),
            lookahead: 1.0,
            suppress_pedestrians: true,
            ..Self::turtlebot(range_min, range_max)
        }
    }

    pub fn validate(&self, total_beams: usize) -> Result<(), ObservationError> {
        self.sector.validate(total_beams)?;
        ScaleBounds::new(self.lidar_bounds.min, self.lidar_bounds.max)?;
        ScaleBounds::symmetric(self.ped_velocity_bound)?;
        ScaleBounds::symmetric(self.lookahead)?;
        Ok(())
    }
}

/// Owns the scan history and turns raw inputs into observations.
#[derive(Debug, Clone)]
pub struct ObservationEncoder {
    config: EncoderConfig,
    history: ScanHistoryBuffer,
}

impl ObservationEncoder {
    pub fn new(config: EncoderConfig) -> Self {
        Self { config, history: ScanHistoryBuffer::new() }
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn history(&self) -> &ScanHistoryBuffer {
        &self.history
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }

    pub fn push_scan(&mut self, scan: LidarScan) {
        self.history.push(scan);
    }

    pub fn encode(&self, tracks: &[TrackedPedestrian], subgoal: &SubGoal) -> Result<Observation, ObservationError> {
        let cfg = &self.config;
        let lidar_raw = build_lidar_grid(&self.history, &cfg.sector)?;
        let lidar_scale = ScaleBounds::new(cfg.lidar_bounds.min, cfg.lidar_bounds.max)?;
        let vel_scale = ScaleBounds::symmetric(cfg.ped_velocity_bound)?;
        let goal_scale = ScaleBounds::symmetric(cfg.lookahead)?;

        let peds = if cfg.suppress_pedestrians {
            PedestrianGrids { vx: Grid80::zeros(), vy: Grid80::zeros() }
        } else {
            build_ped_grids(tracks)
        };
        let to_f32 = |g: &Grid80, s: &ScaleBounds| g.values().iter().map(|&v| s.scale(v) as f32).collect();
        Ok(Observation {
            lidar: to_f32(&lidar_raw, &lidar_scale),
            ped_vx: to_f32(&peds.vx, &vel_scale),
            ped_vy: to_f32(&peds.vy, &vel_scale),
            goal: [goal_scale.scale(subgoal.rel_x) as f32, goal_scale.scale(subgoal.rel_y) as f32],
        })
    }
}
