//! Fixed-step simulation loop tying the world, crowd, perception, heading
//! search, observation encoder and reward together.
//!
//! One tick: apply the action, move the robot, move the crowd, sweep the
//! lidar, detect and track pedestrians, encode the observation, score the
//! step, then check termination. Each goal of the sequence is one leg; a
//! leg ends in success, collision, timeout, or is unreachable.

pub mod config;
pub mod metrics;
pub mod policy;
pub mod protocol;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{denormalize_action, step_robot, Action, RobotState};
use crate::crowd::{step_crowd, Pedestrian, RobotDisc};
use crate::geometry::{from_robot_frame, to_robot_frame, vector_to_robot_frame, Pose2D, Vec2};
use crate::observation::{select_subgoal, Observation, ObservationEncoder, ObservationError, SubGoal};
use crate::perception::{detect, TrackedPedestrian, Tracker};
use crate::reward::{reward_total, RewardBreakdown, RewardInputs, Terminal};
use crate::vo::{search_desired_heading, search_speed, Agent};
use crate::world::{
    nearest_obstacle_distance, plan_global_path, raycast_scan, Disc, LidarScan, OccupancyGrid, WorldError,
};

pub use config::{
    ConstrainedMapSpec, ControlConfig, CrowdGenerator, EmptyMapSpec, MapSource, PedestrianSpec, Profile,
    ProgressTarget, RobotSpec, ScenarioConfig, TimeoutScope,
};
pub use metrics::{
    run_benchmark, run_trial, summarize, trial_seed, BenchmarkSummary, EpisodeRecord, PedSample, TrajectorySample,
};
pub use policy::{policy_by_name, Policy, StraightPolicy, VoSteerPolicy};

const STREAM_CROWD: u64 = 1;
const STREAM_DETECTOR: u64 = 2;
const STREAM_SEARCH: u64 = 3;
/// Search radius for wall contact checks; anything beyond is irrelevant.
const WALL_SEARCH_RADIUS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("cannot load map: {0}")]
    MapLoad(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Observation(#[from] ObservationError),
    #[error("step called before reset")]
    NotReset,
    #[error("episode is done; call reset")]
    EpisodeDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
    Unreachable,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
            Outcome::Unreachable => "unreachable",
        }
    }
}

impl From<Terminal> for Outcome {
    fn from(t: Terminal) -> Self {
        match t {
            Terminal::Collision => Outcome::Collision,
            Terminal::Goal => Outcome::Success,
            Terminal::Timeout => Outcome::Timeout,
        }
    }
}

/// Side information published with every observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step: u64,
    pub time: f64,
    pub leg_time: f64,
    pub goal_index: usize,
    pub goal_count: usize,
    pub pose: Pose2D,
    /// Sub-goal in the robot frame.
    pub subgoal: [f64; 2],
    /// Direction of the sub-goal in the robot frame.
    pub theta_g: f64,
    /// Collision-free desired heading in the robot frame.
    pub theta_d: f64,
    /// Speed cap that applies to the next action.
    pub v_max: f64,
    /// Action applied on the last step.
    pub action: Action,
    /// True when the last raw action was outside [-1, 1] or not finite.
    pub action_clamped: bool,
    pub obstacle_distance: f64,
    pub goal_distance: f64,
    pub tracked_pedestrians: usize,
    /// Set on the step that closes a leg.
    pub leg_outcome: Option<Outcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

/// Running totals for the current leg.
#[derive(Debug, Clone)]
struct LegLog {
    start: Vec2,
    start_time: f64,
    path_length: f64,
    reward_sum: f64,
    trajectory: Vec<TrajectorySample>,
}

impl LegLog {
    fn new(start: Vec2, start_time: f64) -> Self {
        Self { start, start_time, path_length: 0.0, reward_sum: 0.0, trajectory: Vec::new() }
    }
}

struct EpisodeState {
    seed: u64,
    robot: RobotState,
    peds: Vec<Pedestrian>,
    tracker: Tracker,
    encoder: ObservationEncoder,
    rng_detector: ChaCha8Rng,
    rng_search: ChaCha8Rng,
    path: Vec<Vec2>,
    goal_index: usize,
    step: u64,
    time: f64,
    leg_time: f64,
    prev_goal_dist: f64,
    /// World-frame sub-goal from the latest encode.
    subgoal_world: Vec2,
    last_scan: LidarScan,
    done: bool,
    leg: LegLog,
    info: StepInfo,
    observation: Observation,
}

pub struct Engine {
    cfg: ScenarioConfig,
    grid: Arc<OccupancyGrid>,
    record_trajectory: bool,
    state: Option<EpisodeState>,
    records: Vec<EpisodeRecord>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Engine {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let grid = cfg.build_grid()?;
        Ok(Self { cfg, grid, record_trajectory: true, state: None, records: Vec::new() })
    }

    /// Reuses an already built map.
    pub fn with_grid(cfg: ScenarioConfig, grid: Arc<OccupancyGrid>) -> Result<Self, EngineError> {
        cfg.validate()?;
        Ok(Self { cfg, grid, record_trajectory: true, state: None, records: Vec::new() })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Arc<OccupancyGrid> {
        &self.grid
    }

    /// Turns per-step trajectory logging on or off.
    pub fn set_record_trajectory(&mut self, on: bool) {
        self.record_trajectory = on;
    }

    pub fn is_done(&self) -> bool {
        self.state.as_ref().is_none_or(|s| s.done)
    }

    pub fn info(&self) -> Option<&StepInfo> {
        self.state.as_ref().map(|s| &s.info)
    }

    pub fn observation(&self) -> Option<&Observation> {
        self.state.as_ref().map(|s| &s.observation)
    }

    pub fn robot(&self) -> Option<&RobotState> {
        self.state.as_ref().map(|s| &s.robot)
    }

    pub fn pedestrians(&self) -> &[Pedestrian] {
        self.state.as_ref().map_or(&[], |s| &s.peds)
    }

    /// Most recent lidar sweep.
    pub fn last_scan(&self) -> Option<&LidarScan> {
        self.state.as_ref().map(|s| &s.last_scan)
    }

    pub fn global_path(&self) -> &[Vec2] {
        self.state.as_ref().map_or(&[], |s| &s.path)
    }

    /// Tracks in the robot frame.
    pub fn tracks(&self) -> Vec<TrackedPedestrian> {
        self.state.as_ref().map_or_else(Vec::new, |s| robot_frame_tracks(&s.tracker, &s.robot.pose))
    }

    /// Completed legs since the last reset.
    pub fn records(&self) -> &[EpisodeRecord] {
        &self.records
    }

    pub fn take_records(&mut self) -> Vec<EpisodeRecord> {
        std::mem::take(&mut self.records)
    }

    /// Starts a new run of the goal sequence. If the first goal cannot be
    /// reached the run is immediately done with an unreachable leg.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, EngineError> {
        self.records.clear();
        let cfg = &self.cfg;
        let mut rng_crowd = stream(seed, STREAM_CROWD);
        let peds = cfg.build_pedestrians(&self.grid, &mut rng_crowd);
        let r = &cfg.robot;
        let robot = RobotState::at_rest(Pose2D::new(r.start[0], r.start[1], r.start[2]), r.radius);
        let placeholder = Observation { lidar: Vec::new(), ped_vx: Vec::new(), ped_vy: Vec::new(), goal: [0.0; 2] };
        let mut st = EpisodeState {
            seed,
            robot,
            peds,
            tracker: Tracker::new(cfg.tracker_config()),
            encoder: ObservationEncoder::new(cfg.encoder_config()),
            rng_detector: stream(seed, STREAM_DETECTOR),
            rng_search: stream(seed, STREAM_SEARCH),
            path: Vec::new(),
            goal_index: 0,
            step: 0,
            time: 0.0,
            leg_time: 0.0,
            prev_goal_dist: 0.0,
            subgoal_world: Vec2::ZERO,
            last_scan: LidarScan { ranges: Vec::new(), timestamp: 0.0 },
            done: false,
            leg: LegLog::new(robot.pose.position(), 0.0),
            info: blank_info(robot.pose, cfg.goals.len()),
            observation: placeholder,
        };
        self.begin_leg(&mut st)?;
        self.state = Some(st);
        Ok(self.state.as_ref().expect("just set").observation.clone())
    }

    /// Advances one tick with a normalized action in [-1, 1]^2.
    pub fn step(&mut self, action: [f64; 2]) -> Result<StepResult, EngineError> {
        let mut st = self.state.take().ok_or(EngineError::NotReset)?;
        if st.done {
            self.state = Some(st);
            return Err(EngineError::EpisodeDone);
        }
        let out = self.tick(&mut st, action);
        self.state = Some(st);
        out
    }

    /// After a failed leg, moves the robot to that leg's goal and starts the
    /// next one, so every goal of the sequence gets a record. Returns `None`
    /// when the run is finished.
    pub fn continue_after_failure(&mut self) -> Result<Option<Observation>, EngineError> {
        let Some(mut st) = self.state.take() else {
            return Err(EngineError::NotReset);
        };
        let result = self.continue_inner(&mut st);
        self.state = Some(st);
        result
    }

    fn continue_inner(&mut self, st: &mut EpisodeState) -> Result<Option<Observation>, EngineError> {
        if !st.done {
            return Ok(Some(st.observation.clone()));
        }
        if matches!(st.info.leg_outcome, Some(Outcome::Success) | None) {
            return Ok(None);
        }
        if st.goal_index + 1 >= self.cfg.goals.len() {
            return Ok(None);
        }
        let here = goal_vec(&self.cfg, st.goal_index);
        st.goal_index += 1;
        let next = goal_vec(&self.cfg, st.goal_index);
        let heading = (next - here).angle();
        st.robot = RobotState::at_rest(Pose2D::new(here.x, here.y, heading), st.robot.radius);
        st.tracker.reset();
        st.encoder.reset();
        st.done = false;
        self.begin_leg(st)?;
        Ok(Some(st.observation.clone()))
    }

    /// Plans toward the current goal, resets the leg clock and refreshes
    /// perception. Loops over unreachable goals, recording each.
    fn begin_leg(&mut self, st: &mut EpisodeState) -> Result<(), EngineError> {
        loop {
            let start = st.robot.pose.position();
            let goal = goal_vec(&self.cfg, st.goal_index);
            st.leg = LegLog::new(start, st.time);
            st.leg_time = 0.0;
            st.prev_goal_dist = start.distance(goal);
            match plan_global_path(&self.grid, start, goal, self.cfg.planner_inflation()) {
                Ok(path) => {
                    st.path = path;
                    break;
                }
                Err(WorldError::Unreachable) => {
                    st.path = vec![start, goal];
                    self.close_leg(st, Outcome::Unreachable);
                    if st.goal_index + 1 >= self.cfg.goals.len() {
                        st.done = true;
                        break;
                    }
                    st.goal_index += 1;
                    let heading = (goal_vec(&self.cfg, st.goal_index) - goal).angle();
                    st.robot = RobotState::at_rest(Pose2D::new(goal.x, goal.y, heading), st.robot.radius);
                }
                Err(e) => return Err(e.into()),
            }
        }
        // A fresh sweep seeds the history (the encoder pads with it).
        if st.encoder.history().is_empty() {
            let scan = self.sweep(st)?;
            st.encoder.push_scan(scan.clone());
            st.last_scan = scan;
            self.perceive(st);
        }
        let (obs, theta_g, theta_d, subgoal) = self.encode(st)?;
        st.observation = obs;
        let pose = st.robot.pose;
        let obstacle = self.obstacle_distance(st);
        st.info = StepInfo {
            step: st.step,
            time: st.time,
            leg_time: st.leg_time,
            goal_index: st.goal_index,
            goal_count: self.cfg.goals.len(),
            pose,
            subgoal: [subgoal.rel_x, subgoal.rel_y],
            theta_g,
            theta_d,
            v_max: self.v_max_for(&st.last_scan),
            action: Action::default(),
            action_clamped: false,
            obstacle_distance: obstacle,
            goal_distance: st.prev_goal_dist,
            tracked_pedestrians: st.tracker.tracks().len(),
            leg_outcome: st.info.leg_outcome.filter(|_| st.done),
        };
        Ok(())
    }

    fn tick(&mut self, st: &mut EpisodeState, raw: [f64; 2]) -> Result<StepResult, EngineError> {
        let dt = self.cfg.dt;
        let clamped = raw.iter().any(|a| !a.is_finite() || a.abs() > 1.0);
        let v_max = self.v_max_for(&st.last_scan);
        let action = denormalize_action(raw, v_max);

        let before = st.robot.pose.position();
        st.robot = step_robot(&st.robot, action, dt);
        let after = st.robot.pose.position();
        st.leg.path_length += after.distance(before);

        let disc = RobotDisc { position: after, radius: st.robot.radius };
        step_crowd(&mut st.peds, &self.grid, Some(disc), &self.cfg.social_force, dt);
        st.step += 1;
        st.time = st.step as f64 * dt;
        st.leg_time = st.time - st.leg.start_time;

        let scan = self.sweep(st)?;
        st.encoder.push_scan(scan.clone());
        st.last_scan = scan;
        self.perceive(st);
        let target = st.subgoal_world;
        let (obs, theta_g, theta_d, subgoal) = self.encode(st)?;

        let goal = goal_vec(&self.cfg, st.goal_index);
        let goal_dist = after.distance(goal);
        let (progress_now, progress_prev) = match self.cfg.progress_target {
            ProgressTarget::Subgoal if goal_dist >= self.cfg.reward.g_m => {
                (after.distance(target), before.distance(target))
            }
            _ => (goal_dist, st.prev_goal_dist),
        };
        let obstacle = self.obstacle_distance(st);
        let t = match self.cfg.timeout_scope {
            TimeoutScope::PerGoal => st.leg_time,
            TimeoutScope::PerRun => st.time,
        };
        let reward = reward_total(
            &RewardInputs {
                goal_dist_now: progress_now,
                goal_dist_prev: progress_prev,
                t,
                obstacle_dist: obstacle,
                omega: action.omega_z,
                desired_heading: theta_d,
            },
            &self.cfg.reward,
        );
        st.prev_goal_dist = goal_dist;
        st.leg.reward_sum += reward.total;
        if self.record_trajectory {
            st.leg.trajectory.push(TrajectorySample {
                t: st.time,
                x: after.x,
                y: after.y,
                heading: st.robot.pose.heading,
                v: action.v_x,
                omega: action.omega_z,
                reward: reward.total,
                theta_d,
                peds: st.peds.iter().map(|p| PedSample { id: p.id, x: p.position.x, y: p.position.y }).collect(),
            });
        }

        let outcome = reward.terminal().map(Outcome::from);
        st.observation = obs;
        st.info = StepInfo {
            step: st.step,
            time: st.time,
            leg_time: st.leg_time,
            goal_index: st.goal_index,
            goal_count: self.cfg.goals.len(),
            pose: st.robot.pose,
            subgoal: [subgoal.rel_x, subgoal.rel_y],
            theta_g,
            theta_d,
            v_max: self.v_max_for(&st.last_scan),
            action,
            action_clamped: clamped,
            obstacle_distance: obstacle,
            goal_distance: goal_dist,
            tracked_pedestrians: st.tracker.tracks().len(),
            leg_outcome: outcome,
        };

        if let Some(outcome) = outcome {
            self.close_leg(st, outcome);
            let more = st.goal_index + 1 < self.cfg.goals.len();
            if outcome == Outcome::Success && more {
                st.goal_index += 1;
                let info = st.info.clone();
                self.begin_leg(st)?;
                // Keep the step's own bookkeeping, report the new leg's targets.
                st.info = StepInfo {
                    goal_index: st.goal_index,
                    subgoal: st.info.subgoal,
                    theta_g: st.info.theta_g,
                    theta_d: st.info.theta_d,
                    leg_outcome: Some(Outcome::Success),
                    ..info
                };
            } else {
                st.done = true;
            }
        }
        Ok(StepResult { observation: st.observation.clone(), reward, done: st.done, info: st.info.clone() })
    }

    fn close_leg(&mut self, st: &mut EpisodeState, outcome: Outcome) {
        let goal = goal_vec(&self.cfg, st.goal_index);
        let duration = if outcome == Outcome::Unreachable { 0.0 } else { st.leg_time };
        let leg = std::mem::replace(&mut st.leg, LegLog::new(st.robot.pose.position(), st.time));
        self.records.push(EpisodeRecord {
            trial: 0,
            leg: st.goal_index,
            seed: st.seed,
            outcome,
            duration,
            path_length: leg.path_length,
            mean_speed: if duration > 0.0 { leg.path_length / duration } else { 0.0 },
            reward_sum: leg.reward_sum,
            start: [leg.start.x, leg.start.y],
            goal: [goal.x, goal.y],
            trajectory: leg.trajectory,
        });
        st.info.leg_outcome = Some(outcome);
    }

    fn v_max_for(&self, scan: &LidarScan) -> f64 {
        match self.cfg.profile {
            Profile::Turtlebot => self.cfg.control.v_max,
            Profile::Jackal => self.cfg.control.velocity_switch.v_max(nearest_obstacle_distance(scan)),
        }
    }

    fn sweep(&self, st: &EpisodeState) -> Result<LidarScan, EngineError> {
        let discs: Vec<Disc> = st.peds.iter().map(|p| Disc { center: p.position, radius: p.radius }).collect();
        let scan = raycast_scan(&self.grid, &st.robot.pose, &self.cfg.lidar_config(), &discs)?;
        Ok(scan.with_timestamp(st.time))
    }

    /// Detects in the robot frame, then tracks in the world frame so track
    /// velocities are the pedestrians' own motion.
    fn perceive(&self, st: &mut EpisodeState) {
        let pose = st.robot.pose;
        let detections = detect(&st.peds, &pose, &self.grid, &self.cfg.detector_config(), &mut st.rng_detector);
        let world: Vec<Vec2> = detections.iter().map(|d| from_robot_frame(d.rel_position, &pose)).collect();
        st.tracker.update(&world, self.cfg.dt);
    }

    fn encode(&self, st: &mut EpisodeState) -> Result<(Observation, f64, f64, SubGoal), EngineError> {
        let pose = st.robot.pose;
        let tracks = robot_frame_tracks(&st.tracker, &pose);
        let subgoal = select_subgoal(&st.path, &pose, st.encoder.config().lookahead)?;
        let theta_g = subgoal.angle();
        let r_ped = self.cfg.control.assumed_ped_radius;
        let agents: Vec<Agent> = tracks
            .iter()
            .map(|t| Agent { position: t.rel_position, velocity: t.rel_velocity, radius: r_ped })
            .collect();
        let theta_d = search_desired_heading(
            theta_g,
            st.robot.radius,
            &agents,
            search_speed(st.robot.v_x),
            &self.cfg.heading_search,
            &mut st.rng_search,
        );
        let obs = st.encoder.encode(&tracks, &subgoal)?;
        st.subgoal_world = from_robot_frame(subgoal.as_vec(), &pose);
        Ok((obs, theta_g, theta_d, subgoal))
    }

    /// Distance from the robot center to the nearest obstacle surface,
    /// combining the lidar, wall contact (which covers the lidar blind
    /// spot) and pedestrian discs.
    fn obstacle_distance(&self, st: &EpisodeState) -> f64 {
        let pos = st.robot.pose.position();
        let mut d = nearest_obstacle_distance(&st.last_scan);
        if let Some((wall, _)) = self.grid.nearest_occupied(pos, WALL_SEARCH_RADIUS) {
            d = d.min(wall);
        }
        for p in &st.peds {
            d = d.min(p.position.distance(pos) - p.radius);
        }
        d.max(0.0)
    }
}

fn goal_vec(cfg: &ScenarioConfig, i: usize) -> Vec2 {
    let g = cfg.goals[i];
    Vec2::new(g[0], g[1])
}

fn robot_frame_tracks(tracker: &Tracker, pose: &Pose2D) -> Vec<TrackedPedestrian> {
    tracker
        .tracks()
        .iter()
        .map(|t| TrackedPedestrian {
            rel_position: to_robot_frame(t.rel_position, pose),
            rel_velocity: vector_to_robot_frame(t.rel_velocity, pose),
            ..t.clone()
        })
        .collect()
}

fn blank_info(pose: Pose2D, goal_count: usize) -> StepInfo {
    StepInfo {
        step: 0,
        time: 0.0,
        leg_time: 0.0,
        goal_index: 0,
        goal_count,
        pose,
        subgoal: [0.0; 2],
        theta_g: 0.0,
        theta_d: 0.0,
        v_max: 0.0,
        action: Action::default(),
        action_clamped: false,
        obstacle_distance: 0.0,
        goal_distance: 0.0,
        tracked_pedestrians: 0,
        leg_outcome: None,
    }
}
