//! Deterministic 2D crowd-navigation simulator with velocity-obstacle
//! heading search, egocentric observation encoding and a shaped
//! navigation reward.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod crowd;
pub mod engine;
pub mod geometry;
pub mod observation;
pub mod perception;
pub mod reward;
pub mod scenarios;
pub mod vo;
pub mod world;

pub use control::{Action, RobotState};
pub use engine::{
    BenchmarkSummary, Engine, EngineError, EpisodeRecord, Outcome, Policy, ScenarioConfig, StepInfo, StepResult,
};
pub use geometry::{Pose2D, Vec2, Velocity2D};
pub use observation::Observation;
pub use reward::{RewardBreakdown, RewardParams};
pub use world::{LidarConfig, LidarScan, OccupancyGrid};
