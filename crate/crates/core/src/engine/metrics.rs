//! Per-leg records, aggregate metrics and the benchmark driver.

use serde::{Deserialize, Serialize};

use super::{Engine, EngineError, Outcome, Policy, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedSample {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub v: f64,
    pub omega: f64,
    pub reward: f64,
    pub theta_d: f64,
    pub peds: Vec<PedSample>,
}

/// One leg of a run: from the leg start to the goal (or failure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub trial: usize,
    pub leg: usize,
    pub seed: u64,
    pub outcome: Outcome,
    /// Seconds.
    pub duration: f64,
    /// Meters travelled.
    pub path_length: f64,
    /// Path length over duration.
    pub mean_speed: f64,
    pub reward_sum: f64,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectorySample>,
}

/// Aggregate row of the results table. Time, length and speed average
/// over successful legs only and are empty when there are none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    #[serde(rename = "Environment")]
    pub environment: String,
    #[serde(rename = "Method")]
    pub method: String,
    #[serde(rename = "Success Rate")]
    pub success_rate: f64,
    #[serde(rename = "Average Time (s)")]
    pub avg_time: Option<f64>,
    #[serde(rename = "Average Length (m)")]
    pub avg_length: Option<f64>,
    #[serde(rename = "Average Speed (m/s)")]
    pub avg_speed: Option<f64>,
    #[serde(rename = "Episodes")]
    pub episodes: usize,
    #[serde(rename = "Collisions")]
    pub collisions: usize,
    #[serde(rename = "Timeouts")]
    pub timeouts: usize,
    #[serde(rename = "Unreachable")]
    pub unreachable: usize,
}

pub fn summarize(environment: &str, method: &str, records: &[EpisodeRecord]) -> BenchmarkSummary {
    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
    let ok: Vec<&EpisodeRecord> = records.iter().filter(|r| r.outcome == Outcome::Success).collect();
    let mean =
        |f: fn(&EpisodeRecord) -> f64| (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64);
    BenchmarkSummary {
        environment: environment.to_string(),
        method: method.to_string(),
        success_rate: if records.is_empty() { 0.0 } else { ok.len() as f64 / records.len() as f64 },
        avg_time: mean(|r| r.duration),
        avg_length: mean(|r| r.path_length),
        avg_speed: mean(|r| r.mean_speed),
        episodes: records.len(),
        collisions: count(Outcome::Collision),
        timeouts: count(Outcome::Timeout),
        unreachable: count(Outcome::Unreachable),
    }
}

/// Seed of trial `k` for base seed `base`.
pub fn trial_seed(base: u64, k: usize) -> u64 {
    base.wrapping_add(k as u64)
}

/// Runs one trial: the full goal sequence, continuing past failed legs.
pub fn run_trial(
    engine: &mut Engine,
    policy: &mut dyn Policy,
    trial: usize,
) -> Result<Vec<EpisodeRecord>, EngineError> {
    let seed = trial_seed(engine.config().seed, trial);
    let mut obs = engine.reset(seed)?;
    policy.reset();
    let mut out = Vec::new();
    loop {
        if engine.is_done() {
            out.extend(engine.take_records());
            match engine.continue_after_failure()? {
                Some(o) => {
                    obs = o;
                    policy.reset();
                    continue;
                }
                None => break,
            }
        }
        let info = engine.info().expect("engine was reset").clone();
        let a = policy.act(&obs, &info);
        obs = engine.step(a)?.observation;
    }
    for r in &mut out {
        r.trial = trial;
    }
    Ok(out)
}

/// Runs `trials` trials sequentially with one policy.
pub fn run_benchmark(
    cfg: &ScenarioConfig,
    policy: &mut dyn Policy,
    trials: usize,
    record_trajectory: bool,
) -> Result<(Vec<EpisodeRecord>, BenchmarkSummary), EngineError> {
    let mut engine = Engine::new(cfg.clone())?;
    engine.set_record_trajectory(record_trajectory);
    let mut records = Vec::new();
    for k in 0..trials {
        records.extend(run_trial(&mut engine, policy, k)?);
    }
    let summary = summarize(cfg.environment_label(), policy.name(), &records);
    Ok((records, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(outcome: Outcome, duration: f64, length: f64) -> EpisodeRecord {
        EpisodeRecord {
            trial: 0,
            leg: 0,
            seed: 0,
            outcome,
            duration,
            path_length: length,
            mean_speed: length / duration,
            reward_sum: 0.0,
            start: [0.0; 2],
            goal: [0.0; 2],
            trajectory: Vec::new(),
        }
    }

    #[test]
    fn summary_averages_successes_only() {
        let rs = [
            rec(Outcome::Success, 10.0, 4.0),
            rec(Outcome::Success, 20.0, 6.0),
            rec(Outcome::Collision, 3.0, 1.0),
            rec(Outcome::Timeout, 25.0, 2.0),
        ];
        let s = summarize("Lobby", "vo-steer", &rs);
        assert_eq!(s.success_rate, 0.5);
        assert_eq!(s.avg_time, Some(15.0));
        assert_eq!(s.avg_length, Some(5.0));
        assert_eq!(s.avg_speed, Some(0.35));
        assert_eq!((s.collisions, s.timeouts, s.unreachable), (1, 1, 0));
    }

    #[test]
    fn empty_summary_has_no_averages() {
        let s = summarize("x", "y", &[rec(Outcome::Collision, 1.0, 1.0)]);
        assert_eq!(s.success_rate, 0.0);
        assert_eq!(s.avg_time, None);
    }
}
