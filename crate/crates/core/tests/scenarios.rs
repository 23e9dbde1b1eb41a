use crowdnav::engine::Engine;
use crowdnav::scenarios::{
    bundled_dir, bundled_map, crowd_sweep, load_bundled, write_bundled_maps, BUNDLED, CROWD_SWEEP,
};
use crowdnav::world::{load_map, plan_global_path, OccupancyGrid};
use crowdnav::Vec2;

#[test]
fn shipped_maps_match_their_builders() {
    let dir = bundled_dir();
    if std::env::var_os("CROWDNAV_REGEN_MAPS").is_some() {
        write_bundled_maps(&dir).unwrap();
    }
    for name in BUNDLED {
        let shipped = load_map(dir.join("maps").join(format!("{name}.map.toml"))).unwrap();
        assert_eq!(shipped, bundled_map(name).unwrap(), "{name}");
    }
}

fn empty_like(g: &OccupancyGrid) -> OccupancyGrid {
    OccupancyGrid::empty(g.resolution(), g.width(), g.height(), g.origin()).unwrap()
}

#[test]
fn every_bundled_goal_is_reachable() {
    for name in BUNDLED {
        let cfg = load_bundled(name).unwrap();
        let engine = Engine::new(cfg.clone()).unwrap();
        let grid = engine.grid();
        let mut from = Vec2::new(cfg.robot.start[0], cfg.robot.start[1]);
        for g in &cfg.goals {
            let to = Vec2::new(g[0], g[1]);
            assert!(plan_global_path(&empty_like(grid), from, to, cfg.planner_inflation()).is_ok(), "{name} empty map");
            assert!(plan_global_path(grid, from, to, cfg.planner_inflation()).is_ok(), "{name} {from:?} -> {to:?}");
            from = to;
        }
    }
}

#[test]
fn crowd_sweep_instantiates_each_size() {
    let cfg = load_bundled("lobby").unwrap();
    for (scenario, n) in crowd_sweep(&cfg).unwrap().into_iter().zip(CROWD_SWEEP) {
        let mut e = Engine::new(scenario).unwrap();
        e.reset(3).unwrap();
        assert_eq!(e.pedestrians().len(), n);
    }
}
