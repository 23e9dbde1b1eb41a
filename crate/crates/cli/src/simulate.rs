use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use crowdnav::engine::{policy_by_name, run_trial, summarize, Engine, Policy};
use crowdnav::scenarios::with_crowd_size;
use crowdnav::{BenchmarkSummary, EpisodeRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::external::ExternalPolicy;
use crate::plot::render_episode_svg;
use crate::{config_error, load_scenario, runtime_error, Failure, PolicyName};

pub struct Options {
    pub scenario: String,
    pub policy: PolicyName,
    pub trials: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub pedestrians: Option<usize>,
    pub svg: bool,
    pub policy_cmd: Option<String>,
    pub jobs: usize,
}

/// One row of `episodes.csv`.
#[derive(Debug, Serialize)]
pub struct EpisodeRow {
    pub trial: usize,
    pub leg: usize,
    pub seed: u64,
    pub outcome: &'static str,
    pub duration_s: f64,
    pub path_length_m: f64,
    pub mean_speed_mps: f64,
    pub reward_sum: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub goal_x: f64,
    pub goal_y: f64,
}

impl From<&EpisodeRecord> for EpisodeRow {
    fn from(r: &EpisodeRecord) -> Self {
        Self {
            trial: r.trial,
            leg: r.leg,
            seed: r.seed,
            outcome: r.outcome.as_str(),
            duration_s: r.duration,
            path_length_m: r.path_length,
            mean_speed_mps: r.mean_speed,
            reward_sum: r.reward_sum,
            start_x: r.start[0],
            start_y: r.start[1],
            goal_x: r.goal[0],
            goal_y: r.goal[1],
        }
    }
}

fn policy_label(p: PolicyName) -> &'static str {
    match p {
        PolicyName::VoSteer => "vo-steer",
        PolicyName::Straight => "straight",
        PolicyName::External => "external",
    }
}

pub fn run(o: Options) -> Result<(), Failure> {
    let mut cfg = load_scenario(&o.scenario)?;
    if let Some(n) = o.pedestrians {
        cfg = with_crowd_size(&cfg, n).map_err(config_error)?;
    }
    cfg.seed = o.seed;
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    cfg.validate().map_err(config_error)?;
    let probe = Engine::new(cfg.clone()).map_err(config_error)?;
    let grid = probe.grid().clone();
    let gain = cfg.control.steering_gain;

    let records: Vec<EpisodeRecord> = match o.policy {
        PolicyName::External => {
            let cmd =
                o.policy_cmd.as_deref().ok_or_else(|| config_error(anyhow!("--policy external needs --policy-cmd")))?;
            let mut policy = ExternalPolicy::spawn(cmd).map_err(config_error)?;
            let mut engine = Engine::with_grid(cfg.clone(), grid).map_err(config_error)?;
            let mut out = Vec::new();
            for k in 0..cfg.trials {
                out.extend(run_trial(&mut engine, &mut policy, k).map_err(runtime_error)?);
                if let Some(e) = policy.take_error() {
                    return Err(runtime_error(e));
                }
            }
            out
        }
        name => {
            let label = policy_label(name);
            let pool = rayon::ThreadPoolBuilder::new().num_threads(o.jobs).build().map_err(runtime_error)?;
            let per_trial: Result<Vec<Vec<EpisodeRecord>>, _> = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|k| {
                        let mut engine = Engine::with_grid(cfg.clone(), grid.clone())?;
                        let mut policy: Box<dyn Policy> = policy_by_name(label, gain).expect("built-in policy");
                        run_trial(&mut engine, policy.as_mut(), k)
                    })
                    .collect()
            });
            per_trial.map_err(runtime_error)?.into_iter().flatten().collect()
        }
    };

    let summary = summarize(cfg.environment_label(), policy_label(o.policy), &records);
    write_outputs(&o.out, &summary, &records, o.svg).map_err(runtime_error)?;
    print_summary(&summary);
    Ok(())
}

pub fn write_outputs(
    out: &Path,
    summary: &BenchmarkSummary,
    records: &[EpisodeRecord],
    svg: bool,
) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;

    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    w.serialize(summary)?;
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("episodes.csv"))?;
    for r in records {
        w.serialize(EpisodeRow::from(r))?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(out.join("trajectories.jsonl"))?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    if svg {
        let dir = out.join("plots");
        fs::create_dir_all(&dir)?;
        for r in records {
            let path = dir.join(format!("trial{}-leg{}.svg", r.trial, r.leg));
            fs::write(path, render_episode_svg(r, None))?;
        }
    }
    Ok(())
}

fn print_summary(s: &BenchmarkSummary) {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
    println!("environment:  {}", s.environment);
    println!("method:       {}", s.method);
    println!(
        "episodes:     {} ({} collisions, {} timeouts, {} unreachable)",
        s.episodes, s.collisions, s.timeouts, s.unreachable
    );
    println!("success rate: {:.3}", s.success_rate);
    println!("avg time:     {} s", opt(s.avg_time));
    println!("avg length:   {} m", opt(s.avg_length));
    println!("avg speed:    {} m/s", opt(s.avg_speed));
}
