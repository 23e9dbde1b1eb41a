mod common;

use std::f64::consts::PI;

use crowdnav::reward::{
    reward_collision, reward_goal, reward_heading, reward_smoothness, reward_total, RewardInputs, RewardParams,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Inputs biased toward branch boundaries as well as the bulk.
fn pick(rng: &mut ChaCha8Rng, lo: f64, hi: f64, edges: &[f64]) -> f64 {
    if rng.random_bool(0.1) {
        edges[rng.random_range(0..edges.len())]
    } else {
        rng.random_range(lo..hi)
    }
}

#[test]
fn every_term_matches_the_oracle_on_100k_inputs() {
    let p = RewardParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100_000 {
        let now = pick(&mut rng, 0.0, 10.0, &[0.3, 0.0]);
        let prev = pick(&mut rng, 0.0, 10.0, &[0.3]);
        let t = pick(&mut rng, 0.0, 40.0, &[25.0]);
        let obs = pick(&mut rng, 0.0, 3.0, &[0.3, 1.2]);
        let w = pick(&mut rng, -2.0, 2.0, &[1.0, -1.0]);
        let th = pick(&mut rng, -PI, PI, &[std::f64::consts::FRAC_PI_6, 0.0]);
        let o = common::oracle_reward(now, prev, t, obs, w, th);
        assert_eq!(reward_goal(now, prev, t, &p).to_bits(), o.goal.to_bits());
        assert_eq!(reward_collision(obs, &p).to_bits(), o.collision.to_bits());
        assert_eq!(reward_smoothness(w, &p).to_bits(), o.smooth.to_bits());
        assert_eq!(reward_heading(th, &p).to_bits(), o.heading.to_bits());
        let b = reward_total(
            &RewardInputs {
                goal_dist_now: now,
                goal_dist_prev: prev,
                t,
                obstacle_dist: obs,
                omega: w,
                desired_heading: th,
            },
            &p,
        );
        assert_eq!(b.total.to_bits(), (b.r_g + b.r_c + b.r_w + b.r_d).to_bits());
    }
}

proptest! {
    #[test]
    fn progress_term_is_antisymmetric(a in 0.31f64..20.0, b in 0.31f64..20.0, t in 0.0f64..24.9) {
        let p = RewardParams::default();
        prop_assert_eq!(reward_goal(a, b, t, &p), -reward_goal(b, a, t, &p));
    }
}

#[test]
fn heading_term_peaks_at_zero_and_falls_with_deviation() {
    let p = RewardParams::default();
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * PI / 1000.0).collect();
    for w in grid.windows(2) {
        assert!(reward_heading(w[1], &p) < reward_heading(w[0], &p));
        assert!(reward_heading(-w[1], &p) < reward_heading(-w[0], &p));
    }
    let peak = reward_heading(0.0, &p);
    assert!(grid[1..].iter().all(|&a| reward_heading(a, &p) < peak && reward_heading(-a, &p) < peak));
}
