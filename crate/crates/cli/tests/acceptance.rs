//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};
use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use common::fixtures::{
    as_oracle, check_observation, check_switching, half_failing_config, head_on_min_distance, random_peds,
    random_triple, wall_approach,
};
use crowdnav::crowd::{step_crowd, SocialForceParams};
use crowdnav::engine::metrics::{run_benchmark, summarize};
use crowdnav::engine::policy::{StraightPolicy, VoSteerPolicy};
use crowdnav::engine::CrowdGenerator;
use crowdnav::geometry::interval_contains;
use crowdnav::observation::ped_cell;
use crowdnav::reward::{reward_collision, reward_goal, reward_heading, reward_smoothness, reward_total, RewardInputs};
use crowdnav::scenarios::{load_bundled, lobby_map, with_crowd_size};
use crowdnav::vo::{
    collision_cone, relative_velocity_angle, sample_headings, search_desired_heading, Agent, ConeResult,
    HeadingSearchConfig,
};
use crowdnav::{Engine, Outcome, Pose2D, RewardParams, ScenarioConfig, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reward_oracle() -> Check {
    let p = RewardParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pick = |rng: &mut ChaCha8Rng, lo: f64, hi: f64, edges: &[f64]| {
        if rng.random_bool(0.1) {
            edges[rng.random_range(0..edges.len())]
        } else {
            rng.random_range(lo..hi)
        }
    };
    let n = 100_000;
    for i in 0..n {
        let now = pick(&mut rng, 0.0, 10.0, &[0.3, 0.0]);
        let prev = pick(&mut rng, 0.0, 10.0, &[0.3]);
        let t = pick(&mut rng, 0.0, 40.0, &[25.0]);
        let obs = pick(&mut rng, 0.0, 3.0, &[0.3, 1.2]);
        let w = pick(&mut rng, -2.0, 2.0, &[1.0, -1.0]);
        let th = pick(&mut rng, -PI, PI, &[FRAC_PI_6, 0.0]);
        let o = common::oracle_reward(now, prev, t, obs, w, th);
        let got = [
            reward_goal(now, prev, t, &p),
            reward_collision(obs, &p),
            reward_smoothness(w, &p),
            reward_heading(th, &p),
        ];
        let want = [o.goal, o.collision, o.smooth, o.heading];
        ensure(got.iter().zip(&want).all(|(a, b)| a.to_bits() == b.to_bits()), || {
            format!("input {i}: {got:?} vs oracle {want:?}")
        })?;
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
        ensure(b.total == b.r_g + b.r_c + b.r_w + b.r_d, || format!("input {i}: total is not the sum of terms"))?;
    }
    // Worked examples, compared with the direct f64 evaluation of each
    // formula and with the decimal value.
    let examples = [
        ("goal reached", reward_goal(0.2, 0.3, 5.0, &p), 20.0, 20.0),
        ("timeout", reward_goal(4.0, 4.0, 25.0, &p), -20.0, -20.0),
        ("progress", reward_goal(4.9, 5.0, 5.0, &p), 3.2 * (5.0 - 4.9), 0.32),
        ("collision", reward_collision(0.25, &p), -20.0, -20.0),
        ("near obstacle", reward_collision(1.0, &p), -0.2 * (1.2 - 1.0), -0.04),
        ("fast rotation", reward_smoothness(1.5, &p), -0.1 * 1.5, -0.15),
        ("aligned heading", reward_heading(0.0, &p), 0.6 * FRAC_PI_6, 0.6 * FRAC_PI_6),
    ];
    for (name, got, direct, decimal) in examples {
        ensure(got.to_bits() == direct.to_bits() && (got - decimal).abs() < 1e-12, || {
            format!("{name}: {got} (expected {decimal})")
        })?;
    }
    Ok(format!("{n} inputs x 4 terms match the oracle; 7 worked examples hold"))
}

fn vo_forward_simulation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 10_000;
    let mut disagreements = Vec::new();
    for _ in 0..n {
        let t = random_triple(&mut rng);
        let robot = Agent { position: Vec2::ZERO, velocity: Vec2::ZERO, radius: t.robot_radius };
        let ConeResult::Cone(cone) = collision_cone(&robot, &t.ped) else {
            return Err("sampled triple overlaps".into());
        };
        let angle = relative_velocity_angle(t.speed, t.heading, t.ped.velocity);
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
        if interval_contains(&cone.interval, angle) != hit {
            disagreements.push(cone.interval.boundary_distance(angle));
        }
    }
    let agreement = 1.0 - disagreements.len() as f64 / n as f64;
    let worst = disagreements.iter().copied().fold(0.0, f64::max);
    ensure(agreement >= 0.999, || format!("agreement {agreement}"))?;
    ensure(worst < 1e-3, || format!("disagreement {worst} rad from a cone boundary"))?;
    Ok(format!("agreement {agreement:.4} over {n} triples; worst boundary distance {worst:.2e} rad"))
}

fn heading_search_contract() -> Check {
    let cfg = HeadingSearchConfig::default();
    let mut gen = ChaCha8Rng::seed_from_u64(5);
    let mut fallbacks = 0;
    for seed in 0..1000u64 {
        let count = gen.random_range(0..6);
        let peds = random_peds(&mut gen, count);
        let goal = gen.random_range(-PI..PI);
        let speed = gen.random_range(0.05..0.5);
        let got = search_desired_heading(goal, 0.3, &peds, speed, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let samples = sample_headings(cfg.samples, cfg.mode, &mut ChaCha8Rng::seed_from_u64(seed));
        let want = common::oracle_heading(goal, &samples, speed, &as_oracle(&peds), 0.3);
        ensure(got.to_bits() == want.to_bits(), || format!("seed {seed}: {got} vs replayed {want}"))?;
        if peds.is_empty() {
            ensure(got.to_bits() == goal.to_bits(), || format!("seed {seed}: empty crowd changed the heading"))?;
        }
        if got == FRAC_PI_2 {
            fallbacks += 1;
        }
    }
    // A pedestrian touching the robot blocks every sample.
    let touching = [Agent { position: Vec2::new(0.5, 0.0), velocity: Vec2::ZERO, radius: 0.3 }];
    // A ring of pedestrians closing in blocks every sample without overlap.
    let ring: Vec<Agent> = (0..12)
        .map(|k| {
            let b = k as f64 * PI / 6.0;
            Agent { position: Vec2::from_polar(1.0, b), velocity: Vec2::from_polar(-1.0, b), radius: 0.3 }
        })
        .collect();
    for (name, peds) in [("touching", touching.to_vec()), ("ring", ring)] {
        for seed in 0..20 {
            let d = search_desired_heading(0.4, 0.3, &peds, 0.4, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            ensure(d == FRAC_PI_2, || format!("{name}: fully blocked search returned {d}"))?;
        }
    }
    Ok(format!("1000 instances equal the replayed argmin ({fallbacks} fell back); blocked cases return pi/2"))
}

fn observation_suite() -> Check {
    let cfg = with_crowd_size(&load_bundled("corridor").map_err(|e| e.to_string())?, 15).map_err(|e| e.to_string())?;
    let mut engine = Engine::new(cfg).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut seed = 0;
    check_observation(&engine.reset(seed).map_err(|e| e.to_string())?, 0)?;
    let mut max_tracks = 0;
    for k in 0..1000 {
        if engine.is_done() {
            seed += 1;
            check_observation(&engine.reset(seed).map_err(|e| e.to_string())?, 0)?;
        }
        let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let r = engine.step(a).map_err(|e| e.to_string())?;
        let tracks = engine.tracks().iter().filter(|t| ped_cell(t.rel_position).is_some()).count();
        check_observation(&r.observation, tracks).map_err(|e| format!("step {k}: {e}"))?;
        max_tracks = max_tracks.max(tracks);
    }
    Ok(format!("1000 steps over {} episodes well formed; up to {max_tracks} tracks in view", seed + 1))
}

fn run_cli(args: &[&str], stdin: Option<&str>) -> Result<Vec<u8>, String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_crowdnav"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut input = child.stdin.take().expect("piped stdin");
    if let Some(text) = stdin {
        input.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    }
    drop(input);
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let out = out.to_str().unwrap();
        run_cli(&["simulate", "--scenario", "corridor", "--seed", "7", "--out", out], None)?;
        let files: Vec<Vec<u8>> = ["summary.csv", "episodes.csv", "trajectories.jsonl"]
            .iter()
            .map(|f| std::fs::read(Path::new(out).join(f)).map_err(|e| format!("{f}: {e}")))
            .collect::<Result<_, _>>()?;
        outputs.push(files);
    }
    ensure(outputs[0] == outputs[1], || "benchmark outputs differ between runs".into())?;
    let script: String = std::iter::once(r#"{"cmd":"reset","seed":4}"#.to_string())
        .chain((0..100).map(|k| {
            format!(r#"{{"cmd":"step","a":[{:.3},{:.3}]}}"#, (k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())
        }))
        .chain([r#"{"cmd":"reset","seed":5,"format":"json"}"#.to_string(), r#"{"cmd":"step","a":[1,0]}"#.to_string()])
        .chain(std::iter::once(r#"{"cmd":"close"}"#.to_string()))
        .collect::<Vec<_>>()
        .join("\n");
    let first = run_cli(&["serve", "--scenario", "corridor", "--stdio"], Some(&script))?;
    let second = run_cli(&["serve", "--scenario", "corridor", "--stdio"], Some(&script))?;
    let lines = first.iter().filter(|b| **b == b'\n').count();
    ensure(lines == 104, || format!("transcript has {lines} lines"))?;
    ensure(first == second, || "protocol transcripts differ".into())?;
    let bytes: usize = outputs[0].iter().map(Vec::len).sum();
    Ok(format!("benchmark outputs ({bytes} bytes) and a {lines}-line transcript are byte-identical"))
}

fn navigation_smoke() -> Check {
    let base = load_bundled("corridor").map_err(|e| e.to_string())?;
    let dense = with_crowd_size(&base, 15).map_err(|e| e.to_string())?;
    let run = |cfg: &ScenarioConfig, vo: bool| {
        let trials = cfg.trials;
        let result = if vo {
            run_benchmark(cfg, &mut VoSteerPolicy::default(), trials, false)
        } else {
            run_benchmark(cfg, &mut StraightPolicy::default(), trials, false)
        };
        result.map(|(_, s)| s).map_err(|e| e.to_string())
    };
    let (sparse, dense_vo, dense_straight) = std::thread::scope(|s| {
        let a = s.spawn(|| run(&base, true));
        let b = s.spawn(|| run(&dense, true));
        let c = s.spawn(|| run(&dense, false));
        (a.join().unwrap(), b.join().unwrap(), c.join().unwrap())
    });
    let (sparse, dense_vo, dense_straight) = (sparse?, dense_vo?, dense_straight?);
    ensure(sparse.episodes == 20, || format!("{} episodes", sparse.episodes))?;
    let speed = sparse.avg_speed.unwrap_or(f64::NAN);
    let detail = format!(
        "5 peds: success {:.2}, speed {speed:.3} m/s; 15 peds: vo-steer {:.2} vs straight {:.2}",
        sparse.success_rate, dense_vo.success_rate, dense_straight.success_rate
    );
    ensure(sparse.success_rate >= 0.9, || detail.clone())?;
    ensure((0.35..=0.5).contains(&speed), || detail.clone())?;
    ensure(dense_vo.success_rate > dense_straight.success_rate, || detail.clone())?;
    Ok(detail)
}

fn velocity_switching() -> Check {
    let trace = wall_approach();
    check_switching(&trace)?;
    let at = trace.windows(2).find(|w| w[0].1 != w[1].1).map(|w| (w[0].0, w[1].0)).unwrap();
    Ok(format!("{} steps; limit drops from 2.0 to 0.5 between {:.3} m and {:.3} m", trace.len(), at.0, at.1))
}

fn crowd_sanity() -> Check {
    let grid = lobby_map();
    let mut cfg =
        ScenarioConfig::with_grid("lobby", grid.clone(), Pose2D::new(2.0, 5.0, 0.0), vec![Vec2::new(9.0, 5.0)]);
    cfg.crowd = Some(CrowdGenerator {
        count: 35,
        region_min: [0.6, 0.6],
        region_max: [24.4, 9.4],
        waypoints: 3,
        robot_clearance: 2.0,
        radius: 0.3,
    });
    let mut peds = cfg.build_pedestrians(&grid, &mut ChaCha8Rng::seed_from_u64(4));
    let params = SocialForceParams::default();
    let mut peak: f64 = 0.0;
    for step in 0..10_000 {
        step_crowd(&mut peds, &grid, None, &params, 0.05);
        for p in &peds {
            let ratio = p.velocity.norm() / p.desired_speed;
            ensure(ratio <= 1.3 * (1.0 + 1e-12), || format!("step {step}: pedestrian {} at {ratio:.3}x", p.id))?;
            peak = peak.max(ratio);
        }
    }
    let with = head_on_min_distance(params.robot_repulsion_strength);
    let without = head_on_min_distance(0.0);
    ensure(with > without, || format!("head-on gap {with:.3} m with robot repulsion vs {without:.3} m without"))?;
    Ok(format!("35 peds x 10^4 steps, peak speed {peak:.3}x desired; head-on gap {with:.3} m vs {without:.3} m"))
}

fn metrics_identity() -> Check {
    let mut cfg = load_bundled("corridor").map_err(|e| e.to_string())?;
    cfg.trials = 3;
    let (records, _) = run_benchmark(&cfg, &mut VoSteerPolicy::default(), 3, false).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for r in records.iter().filter(|r| r.outcome == Outcome::Success) {
        let gap = (r.mean_speed * r.duration - r.path_length).abs();
        ensure(gap < 1e-6, || format!("trial {} leg {}: identity off by {gap}", r.trial, r.leg))?;
        checked += 1;
    }
    ensure(checked > 0, || "no successful legs to check".into())?;
    let (batch, summary) =
        run_benchmark(&half_failing_config(), &mut StraightPolicy::default(), 4, false).map_err(|e| e.to_string())?;
    let hand = batch.iter().filter(|r| r.outcome == Outcome::Success).count() as f64 / batch.len() as f64;
    ensure(hand == 0.5 && summary.success_rate == hand, || {
        format!("hand count {hand}, summary {}", summary.success_rate)
    })?;
    let recount = summarize("half", "straight", &batch).success_rate;
    ensure(recount == hand, || format!("recomputed summary {recount}"))?;
    Ok(format!("{checked} successful legs satisfy the identity; crafted batch rate {}", summary.success_rate))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("reward oracle equivalence", Duration::from_secs(5), reward_oracle),
        ("collision cone vs forward simulation", Duration::from_secs(60), vo_forward_simulation),
        ("heading search contract", Duration::from_secs(10), heading_search_contract),
        ("observation shapes and bounds", Duration::from_secs(30), observation_suite),
        ("determinism", Duration::from_secs(60), determinism),
        ("navigation smoke benchmark", Duration::from_secs(300), navigation_smoke),
        ("velocity switching", Duration::from_secs(5), velocity_switching),
        ("crowd model sanity", Duration::from_secs(30), crowd_sanity),
        ("metrics identity", Duration::from_secs(5), metrics_identity),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|d| {
            if elapsed <= *budget {
                Ok(d)
            } else {
                Err(format!("{d}; took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({elapsed:.2?}): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
