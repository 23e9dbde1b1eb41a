//! Scenario files (TOML) and their resolution into runnable settings.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::control::{VelocitySwitch, DEFAULT_STEERING_GAIN, TURTLEBOT_V_MAX};
use crate::crowd::{Pedestrian, SocialForceParams};
use crate::geometry::{Pose2D, Vec2};
use crate::observation::EncoderConfig;
use crate::perception::{DetectorConfig, TrackerConfig};
use crate::reward::RewardParams;
use crate::scenarios::generate_constrained_world;
use crate::vo::HeadingSearchConfig;
use crate::world::{load_map, LidarConfig, OccupancyGrid};

pub const DEFAULT_DT: f64 = 0.05;
pub const DEFAULT_PED_RADIUS: f64 = 0.3;
pub const DEFAULT_ROBOT_RADIUS: f64 = 0.3;
/// Extra clearance added to the robot radius when inflating the map for
/// global planning, so planned paths stay outside the collision distance.
pub const DEFAULT_PLANNER_MARGIN: f64 = 0.2;
pub const DESIRED_SPEED_RANGE: (f64, f64) = (0.8, 1.2);

/// Robot platform profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Front 180 degree lidar pooling, 2 m look-ahead, fixed 0.5 m/s cap.
    #[default]
    Turtlebot,
    /// Full 270 degree pooling, 1 m look-ahead, switched speed cap, no
    /// pedestrian grids.
    Jackal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeoutScope {
    #[default]
    PerGoal,
    PerRun,
}

/// What the progress term of the reward measures distance to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressTarget {
    /// The current leg's goal.
    #[default]
    Goal,
    /// The previous step's sub-goal, held fixed in the world frame while
    /// the robot moves. Success is still judged on the leg goal.
    Subgoal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmptyMapSpec {
    pub width: f64,
    pub height: f64,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub origin: [f64; 2],
    /// Surround the map with a one-cell wall.
    #[serde(default)]
    pub border: bool,
}

fn default_resolution() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedMapSpec {
    pub seed: u64,
    pub difficulty: f64,
}

/// Where the static map comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    /// Sidecar path, relative to the scenario file.
    File(String),
    Empty(EmptyMapSpec),
    Constrained(ConstrainedMapSpec),
    #[serde(skip)]
    Inline(Arc<OccupancyGrid>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    /// `[x, y, heading]`.
    pub start: [f64; 3],
    #[serde(default = "default_robot_radius")]
    pub radius: f64,
}

fn default_robot_radius() -> f64 {
    DEFAULT_ROBOT_RADIUS
}

fn default_ped_radius() -> f64 {
    DEFAULT_PED_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PedestrianSpec {
    pub id: u32,
    pub start: [f64; 2],
    #[serde(default = "default_ped_radius")]
    pub radius: f64,
    /// Sampled from [0.8, 1.2] m/s when omitted.
    #[serde(default)]
    pub desired_speed: Option<f64>,
    pub waypoints: Vec<[f64; 2]>,
    /// Initial velocity, mainly for scripted tests.
    #[serde(default)]
    pub velocity: Option<[f64; 2]>,
}

/// Random crowd: starts and waypoints drawn uniformly from free cells of a
/// rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrowdGenerator {
    pub count: usize,
    pub region_min: [f64; 2],
    pub region_max: [f64; 2],
    #[serde(default = "default_waypoint_count")]
    pub waypoints: usize,
    /// Pedestrians never spawn closer than this to the robot start.
    #[serde(default = "default_spawn_clearance")]
    pub robot_clearance: f64,
    #[serde(default = "default_ped_radius")]
    pub radius: f64,
}

fn default_waypoint_count() -> usize {
    2
}

fn default_spawn_clearance() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub steering_gain: f64,
    /// Fixed speed cap for the turtlebot profile.
    pub v_max: f64,
    pub velocity_switch: VelocitySwitch,
    /// Pedestrian radius assumed when building collision cones from tracks.
    pub assumed_ped_radius: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            steering_gain: DEFAULT_STEERING_GAIN,
            v_max: TURTLEBOT_V_MAX,
            velocity_switch: VelocitySwitch::default(),
            assumed_ped_radius: DEFAULT_PED_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Label for the Environment column of metric tables.
    #[serde(default)]
    pub environment: Option<String>,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub map: MapSource,
    pub robot: RobotSpec,
    pub goals: Vec<[f64; 2]>,
    #[serde(default)]
    pub pedestrians: Vec<PedestrianSpec>,
    #[serde(default)]
    pub crowd: Option<CrowdGenerator>,
    #[serde(default)]
    pub lidar: Option<LidarConfig>,
    #[serde(default)]
    pub detector: Option<DetectorConfig>,
    #[serde(default)]
    pub social_force: SocialForceParams,
    #[serde(default)]
    pub reward: RewardParams,
    #[serde(default)]
    pub heading_search: HeadingSearchConfig,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default)]
    pub timeout_scope: TimeoutScope,
    #[serde(default)]
    pub progress_target: ProgressTarget,
    /// Look-ahead override; the profile decides otherwise.
    #[serde(default)]
    pub lookahead: Option<f64>,
    /// Obstacle inflation for global planning; robot radius plus 0.2 m
    /// when omitted.
    #[serde(default)]
    pub planner_inflation: Option<f64>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_trials() -> usize {
    1
}

impl ScenarioConfig {
    /// Minimal scenario on an inline grid, mainly for tests and tooling.
    pub fn with_grid(name: &str, grid: OccupancyGrid, start: Pose2D, goals: Vec<Vec2>) -> Self {
        Self {
            name: name.to_string(),
            environment: None,
            profile: Profile::Turtlebot,
            dt: DEFAULT_DT,
            seed: 0,
            trials: 1,
            map: MapSource::Inline(Arc::new(grid)),
            robot: RobotSpec { start: [start.x, start.y, start.heading], radius: DEFAULT_ROBOT_RADIUS },
            goals: goals.iter().map(|g| [g.x, g.y]).collect(),
            pedestrians: Vec::new(),
            crowd: None,
            lidar: None,
            detector: None,
            social_force: SocialForceParams::default(),
            reward: RewardParams::default(),
            heading_search: HeadingSearchConfig::default(),
            control: ControlConfig::default(),
            timeout_scope: TimeoutScope::PerGoal,
            progress_target: ProgressTarget::Goal,
            lookahead: None,
            planner_inflation: None,
            base_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, EngineError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg =
            Self::from_toml_str(&text).map_err(|e| EngineError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, EngineError> {
        toml::to_string(self).map_err(|e| EngineError::Config(e.to_string()))
    }

    pub fn environment_label(&self) -> &str {
        self.environment.as_deref().unwrap_or(&self.name)
    }

    pub fn lidar_config(&self) -> LidarConfig {
        self.lidar.unwrap_or_default()
    }

    pub fn detector_config(&self) -> DetectorConfig {
        self.detector.unwrap_or_default()
    }

    pub fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig::default()
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        let lidar = self.lidar_config();
        let mut enc = match self.profile {
            Profile::Turtlebot => EncoderConfig::turtlebot(lidar.range_min, lidar.range_max),
            Profile::Jackal => EncoderConfig::barn(lidar.range_min, lidar.range_max),
        };
        if let Some(l) = self.lookahead {
            enc.lookahead = l;
        }
        enc
    }

    pub fn planner_inflation(&self) -> f64 {
        self.planner_inflation.unwrap_or(self.robot.radius + DEFAULT_PLANNER_MARGIN)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.goals.is_empty() {
            return bad("goal sequence must not be empty".into());
        }
        if !(self.dt > 0.0 && self.dt <= 0.1) {
            return bad(format!("dt {} must lie in (0, 0.1]", self.dt));
        }
        let lidar = self.lidar_config();
        lidar.validate().map_err(|e| EngineError::Config(e.to_string()))?;
        if ((self.dt * lidar.rate) - 1.0).abs() > 1e-9 {
            return bad(format!("dt {} is inconsistent with the {} Hz sensor rate", self.dt, lidar.rate));
        }
        self.encoder_config().validate(lidar.beam_count()).map_err(|e| EngineError::Config(e.to_string()))?;
        self.detector_config().validate().map_err(EngineError::Config)?;
        self.social_force.validate().map_err(EngineError::Config)?;
        self.reward.validate().map_err(EngineError::Config)?;
        if self.heading_search.samples == 0 {
            return bad("heading_search.samples must be at least 1".into());
        }
        if !(self.robot.radius > 0.0) {
            return bad("robot radius must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        for p in &self.pedestrians {
            if !(p.radius > 0.0) {
                return bad(format!("pedestrian {} radius must be positive", p.id));
            }
            if let Some(s) = p.desired_speed {
                if !(s > 0.0 && s <= 2.0) {
                    return bad(format!("pedestrian {} desired speed {s} outside (0, 2]", p.id));
                }
            }
        }
        let mut ids: Vec<u32> = self.pedestrians.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("pedestrian ids must be unique".into());
        }
        if let MapSource::Constrained(c) = &self.map {
            if !(0.0..=1.0).contains(&c.difficulty) {
                return bad("constrained map difficulty must lie in [0, 1]".into());
            }
        }
        Ok(())
    }

    /// Builds the static map.
    pub fn build_grid(&self) -> Result<Arc<OccupancyGrid>, EngineError> {
        match &self.map {
            MapSource::Inline(g) => Ok(Arc::clone(g)),
            MapSource::File(rel) => {
                let path = self.base_dir.as_deref().unwrap_or(Path::new(".")).join(rel);
                load_map(&path).map(Arc::new).map_err(|e| EngineError::MapLoad(e.to_string()))
            }
            MapSource::Empty(spec) => {
                let w = (spec.width / spec.resolution).round() as usize;
                let h = (spec.height / spec.resolution).round() as usize;
                let origin = Pose2D::new(spec.origin[0], spec.origin[1], 0.0);
                let mut g = OccupancyGrid::empty(spec.resolution, w, h, origin)
                    .map_err(|e| EngineError::MapLoad(e.to_string()))?;
                if spec.border {
                    for x in 0..w {
                        g.set_occupied((x, 0), true);
                        g.set_occupied((x, h - 1), true);
                    }
                    for y in 0..h {
                        g.set_occupied((0, y), true);
                        g.set_occupied((w - 1, y), true);
                    }
                }
                Ok(Arc::new(g))
            }
            MapSource::Constrained(spec) => generate_constrained_world(spec.seed, spec.difficulty)
                .map(|w| Arc::new(w.grid))
                .map_err(|e| EngineError::MapLoad(e.to_string())),
        }
    }

    /// Instantiates the roster plus any generated crowd. Desired speeds and
    /// generated placements come from `rng`.
    pub fn build_pedestrians<R: Rng + ?Sized>(&self, grid: &OccupancyGrid, rng: &mut R) -> Vec<Pedestrian> {
        let mut peds: Vec<Pedestrian> = self
            .pedestrians
            .iter()
            .map(|s| {
                let speed =
                    s.desired_speed.unwrap_or_else(|| rng.random_range(DESIRED_SPEED_RANGE.0..=DESIRED_SPEED_RANGE.1));
                let mut p = Pedestrian::new(
                    s.id,
                    Vec2::new(s.start[0], s.start[1]),
                    s.radius,
                    speed,
                    s.waypoints.iter().map(|w| Vec2::new(w[0], w[1])).collect(),
                );
                if let Some(v) = s.velocity {
                    p.velocity = Vec2::new(v[0], v[1]);
                }
                p
            })
            .collect();
        if let Some(gen) = &self.crowd {
            let next_id = peds.iter().map(|p| p.id + 1).max().unwrap_or(0);
            let robot = Vec2::new(self.robot.start[0], self.robot.start[1]);
            let mut placed: Vec<Vec2> = peds.iter().map(|p| p.position).collect();
            for k in 0..gen.count {
                let start = sample_free_point(grid, gen, rng, |p| {
                    p.distance(robot) >= gen.robot_clearance
                        && placed.iter().all(|q| q.distance(p) >= 2.0 * gen.radius + 0.1)
                });
                placed.push(start);
                let waypoints = (0..gen.waypoints).map(|_| sample_free_point(grid, gen, rng, |_| true)).collect();
                let speed = rng.random_range(DESIRED_SPEED_RANGE.0..=DESIRED_SPEED_RANGE.1);
                peds.push(Pedestrian::new(next_id + k as u32, start, gen.radius, speed, waypoints));
            }
        }
        peds
    }
}

/// Rejection-samples a point whose surroundings (one radius plus margin)
/// are free. Gives up after a bounded number of tries and returns the last
/// candidate.
fn sample_free_point<R: Rng + ?Sized>(
    grid: &OccupancyGrid,
    gen: &CrowdGenerator,
    rng: &mut R,
    accept: impl Fn(Vec2) -> bool,
) -> Vec2 {
    let mut candidate = Vec2::new(gen.region_min[0], gen.region_min[1]);
    for _ in 0..1000 {
        candidate = Vec2::new(
            rng.random_range(gen.region_min[0]..=gen.region_max[0]),
            rng.random_range(gen.region_min[1]..=gen.region_max[1]),
        );
        let clear = grid.contains(candidate)
            && grid.nearest_occupied(candidate, gen.radius + 0.2).is_none()
            && accept(candidate);
        if clear {
            break;
        }
    }
    candidate
}
