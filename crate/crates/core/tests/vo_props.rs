mod common;

use std::f64::consts::PI;

use common::fixtures::{as_oracle, random_peds, random_triple};
use crowdnav::geometry::interval_contains;
use crowdnav::vo::{
    collision_cone, relative_velocity_angle, sample_headings, search_desired_heading, search_heading_over, Agent,
    ConeResult, HeadingSearchConfig, SamplingMode,
};
use crowdnav::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cone_membership_agrees_with_forward_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 10_000;
    let mut disagreements = Vec::new();
    for _ in 0..n {
        let t = random_triple(&mut rng);
        let robot = Agent { position: Vec2::ZERO, velocity: Vec2::ZERO, radius: t.robot_radius };
        let ConeResult::Cone(cone) = collision_cone(&robot, &t.ped) else { panic!("sampled outside overlap") };
        let angle = relative_velocity_angle(t.speed, t.heading, t.ped.velocity);
        let inside = interval_contains(&cone.interval, angle);
        let va = Vec2::from_polar(t.speed, t.heading);
        let hit = common::discs_collide(
            (0.0, 0.0),
            (va.x, va.y),
            (t.ped.position.x, t.ped.position.y),
            (t.ped.velocity.x, t.ped.velocity.y),
            t.robot_radius + t.ped.radius,
            20.0,
            0.01,
        );
        if inside != hit {
            disagreements.push(cone.interval.boundary_distance(angle));
        }
    }
    let agreement = 1.0 - disagreements.len() as f64 / n as f64;
    assert!(agreement >= 0.999, "agreement {agreement}");
    assert!(disagreements.iter().all(|d| *d < 1e-3), "{disagreements:?}");
}

#[test]
fn search_equals_replayed_argmin() {
    let cfg = HeadingSearchConfig::default();
    let mut gen = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..1000u64 {
        let count = gen.random_range(0..6);
        let peds = random_peds(&mut gen, count);
        let goal = gen.random_range(-PI..PI);
        let speed = gen.random_range(0.05..0.5);
        let got = search_desired_heading(goal, 0.3, &peds, speed, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let samples = sample_headings(cfg.samples, cfg.mode, &mut ChaCha8Rng::seed_from_u64(seed));
        let want = common::oracle_heading(goal, &samples, speed, &as_oracle(&peds), 0.3);
        assert_eq!(got.to_bits(), want.to_bits(), "seed {seed}");
    }
}

#[test]
fn rotation_equivariance_on_a_fixed_grid() {
    let n = 360;
    let samples = sample_headings(n, SamplingMode::Stratified, &mut ChaCha8Rng::seed_from_u64(0));
    let step = 2.0 * PI / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let count = rng.random_range(1..5);
        let peds = random_peds(&mut rng, count);
        let goal = samples[rng.random_range(0..n)] + 0.3 * step;
        let k = rng.random_range(1..n) as f64;
        let phi = k * step;
        let rotated: Vec<Agent> = peds
            .iter()
            .map(|p| Agent { position: p.position.rotated(phi), velocity: p.velocity.rotated(phi), ..*p })
            .collect();
        let base = search_heading_over(goal, 0.3, &peds, 0.4, &samples, PI / 2.0);
        let turned =
            search_heading_over(crowdnav::geometry::wrap_finite(goal + phi), 0.3, &rotated, 0.4, &samples, PI / 2.0);
        if base == PI / 2.0 || turned == PI / 2.0 {
            continue;
        }
        let diff = crowdnav::geometry::wrap_finite(turned - base - phi);
        assert!(diff.abs() < 1e-6, "rotated result off by {diff}");
    }
}

#[test]
fn result_is_never_inside_a_cone_when_a_free_sample_exists() {
    let cfg = HeadingSearchConfig::default();
    let mut gen = ChaCha8Rng::seed_from_u64(23);
    let robot = Agent { position: Vec2::ZERO, velocity: Vec2::ZERO, radius: 0.3 };
    for seed in 0..2000u64 {
        let count = gen.random_range(1..6);
        let peds = random_peds(&mut gen, count);
        let goal = gen.random_range(-PI..PI);
        let speed = 0.4;
        let d = search_desired_heading(goal, 0.3, &peds, speed, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let samples = sample_headings(cfg.samples, cfg.mode, &mut ChaCha8Rng::seed_from_u64(seed));
        let blocked = |u: f64| {
            peds.iter().any(|p| match collision_cone(&robot, p) {
                ConeResult::Overlap => true,
                ConeResult::Cone(c) => interval_contains(&c.interval, relative_velocity_angle(speed, u, p.velocity)),
            })
        };
        if samples.iter().any(|&u| !blocked(u)) {
            assert!(!blocked(d), "seed {seed}: heading {d} is blocked");
        }
    }
}
