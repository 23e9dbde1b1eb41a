//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;

use crowdnav::crowd::Pedestrian;
use crowdnav::engine::CrowdGenerator;
use crowdnav::scenarios::lobby_map;
use crowdnav::vo::Agent;
use crowdnav::world::Disc;
use crowdnav::{OccupancyGrid, Pose2D, ScenarioConfig, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lobby scenario with a generated crowd of `count` pedestrians.
pub fn lobby(count: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::with_grid(
        "lobby",
        lobby_map(),
        Pose2D::new(2.0, 5.0, 0.0),
        vec![Vec2::new(23.0, 5.0), Vec2::new(2.0, 5.0)],
    );
    cfg.crowd = Some(CrowdGenerator {
        count,
        region_min: [0.6, 0.6],
        region_max: [24.4, 9.4],
        waypoints: 3,
        robot_clearance: 2.0,
        radius: 0.3,
    });
    cfg
}

pub fn lobby_crowd(count: usize, seed: u64) -> (OccupancyGrid, Vec<Pedestrian>) {
    let cfg = lobby(count);
    let grid = lobby_map();
    let peds = cfg.build_pedestrians(&grid, &mut ChaCha8Rng::seed_from_u64(seed));
    (grid, peds)
}

pub fn discs(peds: &[Pedestrian]) -> Vec<Disc> {
    peds.iter().map(|p| Disc { center: p.position, radius: p.radius }).collect()
}

/// Robot-frame pedestrians scattered around the robot.
pub fn agents(count: usize, seed: u64) -> Vec<Agent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Agent {
            position: Vec2::from_polar(rng.random_range(1.0..8.0), rng.random_range(-PI..PI)),
            velocity: Vec2::from_polar(rng.random_range(0.0..1.5), rng.random_range(-PI..PI)),
            radius: 0.3,
        })
        .collect()
}
