//! Bundled scenario library and the constrained-world generator.
//!
//! Shipped scenarios live under `scenarios/v1/` at the workspace root: a
//! PGM raster plus TOML sidecar per map and one scenario TOML per bundle.
//! The rasters are produced by the builders below, so they can be
//! regenerated and checked against the shipped files.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{EngineError, ScenarioConfig};
use crate::geometry::{Pose2D, Vec2};
use crate::world::{plan_global_path, save_map, OccupancyGrid, WorldError};

/// Crowd sizes of the density sweep.
pub const CROWD_SWEEP: [usize; 6] = [5, 15, 25, 35, 45, 55];
pub const BUNDLED: [&str; 4] = ["corridor", "lobby", "square", "barn"];
pub const MAX_GENERATION_ATTEMPTS: usize = 100;

/// Constrained world layout: a walled 14 x 6 m strip.
const STRIP_LENGTH: f64 = 14.0;
const STRIP_WIDTH: f64 = 6.0;
const STRIP_RESOLUTION: f64 = 0.1;
const MAX_CYLINDERS: f64 = 30.0;
const CYLINDER_RADIUS: (f64, f64) = (0.15, 0.35);
/// Matches the engine's default planner inflation for a 0.3 m robot.
const CLEARANCE_RADIUS: f64 = 0.5;
pub const CONSTRAINED_GOAL_DISTANCE: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("difficulty {0} outside [0, 1]")]
    Difficulty(f64),
    #[error("no connected world after {0} attempts")]
    Disconnected(usize),
    #[error("unknown bundled scenario {0:?}")]
    Unknown(String),
    #[error("scenario has no crowd generator to resize")]
    NoCrowd,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedWorld {
    pub grid: OccupancyGrid,
    pub start: Pose2D,
    pub goal: Vec2,
    pub cylinders: Vec<(Vec2, f64)>,
}

fn walled(width_m: f64, height_m: f64, res: f64) -> OccupancyGrid {
    let (w, h) = ((width_m / res).round() as usize, (height_m / res).round() as usize);
    let mut g = OccupancyGrid::empty(res, w, h, Pose2D::default()).expect("valid dimensions");
    for x in 0..w {
        g.set_occupied((x, 0), true);
        g.set_occupied((x, h - 1), true);
    }
    for y in 0..h {
        g.set_occupied((0, y), true);
        g.set_occupied((w - 1, y), true);
    }
    g
}

/// Random cylinder field in a walled strip with the goal 10 m ahead of the
/// start. Cylinder count scales linearly with `difficulty`; every emitted
/// world has a planned path from start to goal.
pub fn generate_constrained_world(seed: u64, difficulty: f64) -> Result<ConstrainedWorld, ScenarioError> {
    if !(0.0..=1.0).contains(&difficulty) {
        return Err(ScenarioError::Difficulty(difficulty));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Pose2D::new(2.0, STRIP_WIDTH / 2.0, 0.0);
    let goal = Vec2::new(start.x + CONSTRAINED_GOAL_DISTANCE, start.y);
    let count = (difficulty * MAX_CYLINDERS).round() as usize;
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let mut grid = walled(STRIP_LENGTH, STRIP_WIDTH, STRIP_RESOLUTION);
        let mut cylinders = Vec::with_capacity(count);
        while cylinders.len() < count {
            let c = Vec2::new(rng.random_range(3.0..=11.0), rng.random_range(0.3..=STRIP_WIDTH - 0.3));
            let r = rng.random_range(CYLINDER_RADIUS.0..=CYLINDER_RADIUS.1);
            if c.distance(start.position()) < r + 0.8 || c.distance(goal) < r + 0.8 {
                continue;
            }
            grid.fill_disc(c, r);
            cylinders.push((c, r));
        }
        if plan_global_path(&grid, start.position(), goal, CLEARANCE_RADIUS).is_ok() {
            return Ok(ConstrainedWorld { grid, start, goal, cylinders });
        }
    }
    Err(ScenarioError::Disconnected(MAX_GENERATION_ATTEMPTS))
}

/// 12 x 4 m walled corridor.
pub fn corridor_map() -> OccupancyGrid {
    walled(12.0, 4.0, 0.1)
}

/// 25 x 10 m lobby: outer walls, a reception desk, two pillars and a
/// partial partition.
pub fn lobby_map() -> OccupancyGrid {
    let mut g = walled(25.0, 10.0, 0.1);
    g.fill_rect(Vec2::new(5.0, 7.0), Vec2::new(8.0, 8.0));
    g.fill_disc(Vec2::new(12.5, 3.0), 0.4);
    g.fill_disc(Vec2::new(12.5, 7.0), 0.4);
    g.fill_rect(Vec2::new(18.0, 0.0), Vec2::new(18.3, 3.5));
    g
}

/// 12 x 12 m open square with a border wall.
pub fn square_map() -> OccupancyGrid {
    walled(12.0, 12.0, 0.1)
}

/// Seed and difficulty of the shipped constrained world.
pub const BARN_SEED: u64 = 11;
pub const BARN_DIFFICULTY: f64 = 0.4;

/// Map raster for a bundled scenario.
pub fn bundled_map(name: &str) -> Result<OccupancyGrid, ScenarioError> {
    match name {
        "corridor" => Ok(corridor_map()),
        "lobby" => Ok(lobby_map()),
        "square" => Ok(square_map()),
        "barn" => Ok(generate_constrained_world(BARN_SEED, BARN_DIFFICULTY)?.grid),
        other => Err(ScenarioError::Unknown(other.to_string())),
    }
}

/// Writes every bundled map as `<dir>/maps/<name>.map.toml` plus PGM.
pub fn write_bundled_maps(dir: &Path) -> Result<(), ScenarioError> {
    let maps = dir.join("maps");
    std::fs::create_dir_all(&maps).map_err(|e| WorldError::Io { path: maps.display().to_string(), source: e })?;
    for name in BUNDLED {
        let grid = bundled_map(name)?;
        save_map(&grid, dir.join("maps").join(format!("{name}.map.toml")))?;
    }
    Ok(())
}

/// Directory of the shipped scenarios. `CROWDNAV_SCENARIOS` overrides the
/// location compiled in from the source tree.
pub fn bundled_dir() -> PathBuf {
    std::env::var_os("CROWDNAV_SCENARIOS")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/v1"))
}

pub fn bundled_scenario_path(name: &str) -> Result<PathBuf, ScenarioError> {
    if !BUNDLED.contains(&name) {
        return Err(ScenarioError::Unknown(name.to_string()));
    }
    Ok(bundled_dir().join(format!("{name}.toml")))
}

pub fn load_bundled(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    Ok(ScenarioConfig::load(bundled_scenario_path(name)?)?)
}

/// Copy of `cfg` whose generated crowd has exactly `count` pedestrians and
/// no scripted ones.
pub fn with_crowd_size(cfg: &ScenarioConfig, count: usize) -> Result<ScenarioConfig, ScenarioError> {
    let mut out = cfg.clone();
    let crowd = out.crowd.as_mut().ok_or(ScenarioError::NoCrowd)?;
    crowd.count = count;
    out.pedestrians.clear();
    out.name = format!("{}-{count}", cfg.name);
    Ok(out)
}

/// One scenario per crowd size of the density sweep.
pub fn crowd_sweep(cfg: &ScenarioConfig) -> Result<Vec<ScenarioConfig>, ScenarioError> {
    CROWD_SWEEP.iter().map(|&n| with_crowd_size(cfg, n)).collect()
}
