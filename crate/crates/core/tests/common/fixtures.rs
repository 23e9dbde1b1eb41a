//! Scripted scenarios shared by the property suites and the acceptance run.

use std::f64::consts::PI;

use crowdnav::crowd::{step_crowd, Pedestrian, RobotDisc, SocialForceParams};
use crowdnav::engine::{Profile, ScenarioConfig};
use crowdnav::observation::{GRID_SIZE, HISTORY_LEN, STACK_COUNT};
use crowdnav::vo::Agent;
use crowdnav::world::nearest_obstacle_distance;
use crowdnav::{Engine, Observation, OccupancyGrid, Pose2D, Vec2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random robot/pedestrian/heading triple with a relative speed of at
/// least 0.5 m/s, so any encounter happens well inside a 20 s horizon.
pub struct Triple {
    pub robot_radius: f64,
    pub speed: f64,
    pub heading: f64,
    pub ped: Agent,
}

pub fn random_triple(rng: &mut ChaCha8Rng) -> Triple {
    loop {
        let robot_radius = rng.random_range(0.2..0.5);
        let ped_radius = rng.random_range(0.2..0.5);
        let dist = rng.random_range(robot_radius + ped_radius + 0.1..8.0);
        let bearing = rng.random_range(-PI..PI);
        let ped = Agent {
            position: Vec2::from_polar(dist, bearing),
            velocity: Vec2::from_polar(rng.random_range(0.0..1.5), rng.random_range(-PI..PI)),
            radius: ped_radius,
        };
        let speed = rng.random_range(0.05..0.5);
        let heading = rng.random_range(-PI..PI);
        let rel = Vec2::from_polar(speed, heading) - ped.velocity;
        if rel.norm() >= 0.5 {
            return Triple { robot_radius, speed, heading, ped };
        }
    }
}

pub fn random_peds(rng: &mut ChaCha8Rng, count: usize) -> Vec<Agent> {
    (0..count)
        .map(|_| Agent {
            position: Vec2::from_polar(rng.random_range(0.9..6.0), rng.random_range(-PI..PI)),
            velocity: Vec2::from_polar(rng.random_range(0.0..1.5), rng.random_range(-PI..PI)),
            radius: 0.3,
        })
        .collect()
}

pub fn as_oracle(peds: &[Agent]) -> Vec<super::OraclePed> {
    peds.iter().map(|p| ((p.position.x, p.position.y), (p.velocity.x, p.velocity.y), p.radius)).collect()
}

/// Shape, range, stacking and sparsity checks for one observation.
pub fn check_observation(obs: &Observation, in_area_tracks: usize) -> Result<(), String> {
    if !obs.is_well_formed() {
        return Err("observation has a wrong shape or a value outside [-1, 1]".into());
    }
    let row = |r: usize| &obs.lidar[r * GRID_SIZE..(r + 1) * GRID_SIZE];
    let block = 2 * HISTORY_LEN;
    for r in 0..block {
        for s in 1..STACK_COUNT {
            if row(r) != row(r + s * block) {
                return Err(format!("lidar row {r} differs in stack {s}"));
            }
        }
    }
    let nonzero = obs.ped_vx.iter().zip(&obs.ped_vy).filter(|(x, y)| **x != 0.0 || **y != 0.0).count();
    if nonzero > in_area_tracks {
        return Err(format!("{nonzero} pedestrian cells for {in_area_tracks} tracks"));
    }
    Ok(())
}

/// Drives straight at a wall on the jackal profile at a fixed 0.4 m/s and
/// returns `(nearest range, v_max)` for every step.
pub fn wall_approach() -> Vec<(f64, f64)> {
    let mut grid = OccupancyGrid::empty(0.1, 120, 60, Pose2D::new(0.0, -3.0, 0.0)).unwrap();
    grid.fill_rect(Vec2::new(9.0, -3.0), Vec2::new(12.0, 3.0));
    let mut cfg = ScenarioConfig::with_grid("wall", grid, Pose2D::new(1.0, 0.0, 0.0), vec![Vec2::new(8.4, 0.0)]);
    cfg.profile = Profile::Jackal;
    let mut e = Engine::new(cfg).unwrap();
    e.reset(0).unwrap();
    let mut out = Vec::new();
    while !e.is_done() {
        let v_max = e.info().unwrap().v_max;
        let r = e.step([2.0 * 0.4 / v_max - 1.0, 0.0]).unwrap();
        out.push((nearest_obstacle_distance(e.last_scan().unwrap()), r.info.v_max));
    }
    out
}

/// Checks that the limit is 2.0 exactly when the nearest range is at least
/// 2.2 m, and that it flips once on the way in.
pub fn check_switching(trace: &[(f64, f64)]) -> Result<(), String> {
    if !trace.iter().any(|(_, v)| *v == 2.0) || !trace.iter().any(|(_, v)| *v == 0.5) {
        return Err("approach never saw both limits".into());
    }
    if let Some((d, v)) = trace.iter().find(|(d, v)| *v != if *d >= 2.2 { 2.0 } else { 0.5 }) {
        return Err(format!("v_max {v} at distance {d}"));
    }
    let flips = trace.windows(2).filter(|w| w[0].1 != w[1].1).count();
    if flips != 1 {
        return Err(format!("{flips} flips"));
    }
    Ok(())
}

/// Minimum robot-pedestrian center distance in a head-on encounter where
/// the robot drives straight at a pedestrian walking the other way.
pub fn head_on_min_distance(robot_strength: f64) -> f64 {
    let grid = OccupancyGrid::empty(0.1, 200, 60, Pose2D::new(0.0, -3.0, 0.0)).unwrap();
    let params = SocialForceParams { robot_repulsion_strength: robot_strength, ..SocialForceParams::default() };
    let mut peds = vec![Pedestrian::new(0, Vec2::new(15.0, 0.05), 0.3, 1.0, vec![Vec2::new(0.5, 0.05)])];
    let mut robot = Vec2::new(1.0, 0.0);
    let mut min = f64::INFINITY;
    for _ in 0..400 {
        robot += Vec2::new(0.5 * 0.05, 0.0);
        step_crowd(&mut peds, &grid, Some(RobotDisc { position: robot, radius: 0.3 }), &params, 0.05);
        min = min.min(peds[0].position.distance(robot));
    }
    min
}

/// Two goals per trial where the second is walled in: every trial yields
/// one success and one unreachable leg.
pub fn half_failing_config() -> ScenarioConfig {
    let mut grid = OccupancyGrid::empty(0.1, 100, 60, Pose2D::new(-2.0, -3.0, 0.0)).unwrap();
    grid.fill_rect(Vec2::new(4.0, -3.0), Vec2::new(4.3, 3.0));
    ScenarioConfig::with_grid("half", grid, Pose2D::new(0.0, 0.0, 0.0), vec![Vec2::new(2.0, 0.0), Vec2::new(6.0, 0.0)])
}
