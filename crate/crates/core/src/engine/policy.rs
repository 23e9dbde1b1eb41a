//! Scripted reference policies that map observations to normalized actions.

use crate::control::{normalize_action, vo_steering_policy, DEFAULT_STEERING_GAIN};
use crate::observation::Observation;

use super::StepInfo;

pub trait Policy: Send {
    fn name(&self) -> &str;

    /// Called at the start of every leg.
    fn reset(&mut self) {}

    /// Normalized action in [-1, 1]^2.
    fn act(&mut self, obs: &Observation, info: &StepInfo) -> [f64; 2];
}

/// Steers toward the collision-free desired heading.
#[derive(Debug, Clone)]
pub struct VoSteerPolicy {
    pub gain: f64,
}

impl Default for VoSteerPolicy {
    fn default() -> Self {
        Self { gain: DEFAULT_STEERING_GAIN }
    }
}

impl Policy for VoSteerPolicy {
    fn name(&self) -> &str {
        "vo-steer"
    }

    fn act(&mut self, _obs: &Observation, info: &StepInfo) -> [f64; 2] {
        normalize_action(vo_steering_policy(info.theta_d, info.v_max, self.gain), info.v_max)
    }
}

/// Same steering law aimed at the sub-goal, ignoring pedestrians.
#[derive(Debug, Clone)]
pub struct StraightPolicy {
    pub gain: f64,
}

impl Default for StraightPolicy {
    fn default() -> Self {
        Self { gain: DEFAULT_STEERING_GAIN }
    }
}

impl Policy for StraightPolicy {
    fn name(&self) -> &str {
        "straight"
    }

    fn act(&mut self, _obs: &Observation, info: &StepInfo) -> [f64; 2] {
        normalize_action(vo_steering_policy(info.theta_g, info.v_max, self.gain), info.v_max)
    }
}

/// Built-in policy by name, with the given steering gain.
pub fn policy_by_name(name: &str, gain: f64) -> Option<Box<dyn Policy>> {
    match name {
        "vo-steer" => Some(Box::new(VoSteerPolicy { gain })),
        "straight" => Some(Box::new(StraightPolicy { gain })),
        _ => None,
    }
}
