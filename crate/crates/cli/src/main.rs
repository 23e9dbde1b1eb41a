mod external;
mod plot;
mod simulate;

use std::io;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use crowdnav::engine::protocol::{serve_env_protocol, serve_tcp};
use crowdnav::engine::Engine;
use crowdnav::scenarios::{load_bundled, BUNDLED};
use crowdnav::world::plan_global_path;
use crowdnav::{ScenarioConfig, Vec2};

/// Crowd-navigation simulator: benchmarks, trajectory plots and an
/// environment server for external policies.
#[derive(Debug, Parser)]
#[command(name = "crowdnav", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyName {
    /// Steer toward the collision-free desired heading.
    VoSteer,
    /// Steer toward the path sub-goal, ignoring pedestrians.
    Straight,
    /// Delegate actions to a child process (see --policy-cmd).
    External,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a benchmark and write summary CSV, per-episode CSV and
    /// JSON-lines trajectories.
    Simulate {
        /// Scenario TOML file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "vo-steer")]
        policy: PolicyName,
        /// Number of trials; defaults to the scenario's own count.
        #[arg(long)]
        trials: Option<usize>,
        /// Base seed; trial k runs with seed + k.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Override the generated crowd size.
        #[arg(long)]
        pedestrians: Option<usize>,
        /// Also render one SVG per episode under <out>/plots.
        #[arg(long)]
        svg: bool,
        /// Command line of the external policy process.
        #[arg(long)]
        policy_cmd: Option<String>,
        /// Worker threads for independent trials (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Serve the environment protocol over TCP, or stdio with --stdio.
    Serve {
        #[arg(long)]
        scenario: String,
        #[arg(long, conflicts_with = "stdio", required_unless_present = "stdio")]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        stdio: bool,
    },
    /// Render one episode of a trajectory log as SVG.
    Plot {
        /// JSON-lines trajectory log written by simulate.
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Zero-based line of the log to plot.
        #[arg(long, default_value_t = 0)]
        episode: usize,
        /// Draw the static map of this scenario underneath.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Histogram of commanded velocities over a trajectory log.
    Histogram {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only count successful episodes.
        #[arg(long)]
        successful_only: bool,
    },
    /// Check that a scenario parses and every goal is reachable.
    Validate {
        #[arg(long)]
        scenario: String,
    },
    /// List the bundled scenarios.
    List,
}

/// Error with an exit code: 2 for usage and configuration problems, 3 for
/// failures at run time.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub fn config_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

pub fn runtime_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: error.into() }
}

/// Loads a scenario from a path, falling back to bundled names.
pub fn load_scenario(spec: &str) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(spec);
    if path.exists() {
        return ScenarioConfig::load(path).map_err(config_error);
    }
    if BUNDLED.contains(&spec) {
        return load_bundled(spec).map_err(config_error);
    }
    Err(config_error(anyhow!("scenario {spec:?} is neither a file nor a bundled scenario")))
}

fn validate(spec: &str) -> Result<(), Failure> {
    let cfg = load_scenario(spec)?;
    let engine = Engine::new(cfg.clone()).map_err(config_error)?;
    let mut from = Vec2::new(cfg.robot.start[0], cfg.robot.start[1]);
    for (i, g) in cfg.goals.iter().enumerate() {
        let to = Vec2::new(g[0], g[1]);
        plan_global_path(engine.grid(), from, to, cfg.planner_inflation())
            .with_context(|| format!("goal {i} at ({:.2}, {:.2}) is unreachable", to.x, to.y))
            .map_err(config_error)?;
        from = to;
    }
    println!("{}: ok ({} goals, profile {:?})", cfg.name, cfg.goals.len(), cfg.profile);
    Ok(())
}

fn serve(scenario: &str, port: Option<u16>, host: &str, stdio: bool) -> Result<(), Failure> {
    let cfg = load_scenario(scenario)?;
    Engine::new(cfg.clone()).map_err(config_error)?;
    if stdio {
        let stdin = io::stdin();
        return serve_env_protocol(cfg, stdin.lock(), io::stdout().lock()).map_err(runtime_error);
    }
    let port = port.expect("clap requires a port without --stdio");
    let listener =
        TcpListener::bind((host, port)).with_context(|| format!("cannot bind {host}:{port}")).map_err(runtime_error)?;
    eprintln!("serving {} on {}", cfg.name, listener.local_addr().map_err(runtime_error)?);
    serve_tcp(listener, cfg).map_err(runtime_error)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { scenario, policy, trials, seed, out, pedestrians, svg, policy_cmd, jobs } => {
            simulate::run(simulate::Options { scenario, policy, trials, seed, out, pedestrians, svg, policy_cmd, jobs })
        }
        Command::Serve { scenario, port, host, stdio } => serve(&scenario, port, &host, stdio),
        Command::Plot { log, out, episode, scenario } => plot::cmd_plot(&log, &out, episode, scenario.as_deref()),
        Command::Histogram { log, out, successful_only } => plot::cmd_histogram(&log, &out, successful_only),
        Command::Validate { scenario } => validate(&scenario),
        Command::List => {
            for name in BUNDLED {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
