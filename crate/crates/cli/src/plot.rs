use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use crowdnav::control::OMEGA_MAX;
use crowdnav::engine::{Engine, Outcome};
use crowdnav::{EpisodeRecord, OccupancyGrid};
use serde::Serialize;

use crate::{config_error, load_scenario, runtime_error, Failure};

const PX_PER_M: f64 = 40.0;
const MARGIN_M: f64 = 0.5;
pub const SPEED_BIN: f64 = 0.1;
pub const OMEGA_BIN: f64 = 0.25 * OMEGA_MAX;

/// Reads a JSON-lines trajectory log. An empty log is an error.
pub fn read_log(path: &Path) -> anyhow::Result<Vec<EpisodeRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let records = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}: malformed record", path.display(), i + 1))
        })
        .collect::<anyhow::Result<Vec<EpisodeRecord>>>()?;
    if records.is_empty() {
        return Err(anyhow!("{} contains no episodes", path.display()));
    }
    Ok(records)
}

struct Frame {
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.min_x) * PX_PER_M, (self.max_y - y) * PX_PER_M)
    }
}

fn frame_for(points: impl Iterator<Item = (f64, f64)>) -> Frame {
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in points {
        lo_x = lo_x.min(x);
        lo_y = lo_y.min(y);
        hi_x = hi_x.max(x);
        hi_y = hi_y.max(y);
    }
    let (min_x, min_y) = (lo_x - MARGIN_M, lo_y - MARGIN_M);
    let (max_x, max_y) = (hi_x + MARGIN_M, hi_y + MARGIN_M);
    Frame { min_x, max_y, width: (max_x - min_x) * PX_PER_M, height: (max_y - min_y) * PX_PER_M }
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], class: &str, color: &str, width: f64) {
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| {
            let (px, py) = frame.px(x, y);
            format!("{px:.1},{py:.1}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"  <polyline class="{class}" fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Top-down view of one episode: static map (optional), one polyline per
/// pedestrian, the robot path, and start and goal markers.
pub fn render_episode_svg(r: &EpisodeRecord, grid: Option<&OccupancyGrid>) -> String {
    let mut peds: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
    for s in &r.trajectory {
        for p in &s.peds {
            peds.entry(p.id).or_default().push((p.x, p.y));
        }
    }
    let mut robot: Vec<(f64, f64)> = vec![(r.start[0], r.start[1])];
    robot.extend(r.trajectory.iter().map(|s| (s.x, s.y)));

    let mut extent: Vec<(f64, f64)> = robot.clone();
    extent.push((r.goal[0], r.goal[1]));
    extent.extend(peds.values().flatten().copied());
    if let Some(g) = grid {
        let o = g.origin();
        let (w, h) = g.size_m();
        extent.push((o.x, o.y));
        extent.push((o.x + w, o.y + h));
    }
    let frame = frame_for(extent.into_iter());

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.1} {:.1}">"#,
        frame.width, frame.height, frame.width, frame.height
    );
    let _ = writeln!(out, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    if let Some(g) = grid {
        let res = g.resolution();
        let side = res * PX_PER_M;
        for cy in 0..g.height() {
            for cx in 0..g.width() {
                if g.is_occupied((cx, cy)) {
                    let c = g.cell_center((cx, cy));
                    let (px, py) = frame.px(c.x - res / 2.0, c.y + res / 2.0);
                    let _ = writeln!(
                        out,
                        r#"  <rect class="obstacle" x="{px:.1}" y="{py:.1}" width="{side:.1}" height="{side:.1}" fill="black"/>"#
                    );
                }
            }
        }
    }
    for pts in peds.values() {
        polyline(&mut out, &frame, pts, "pedestrian", "#999999", 1.5);
    }
    let color = if r.outcome == Outcome::Success { "#1f5fbf" } else { "#c0392b" };
    polyline(&mut out, &frame, &robot, "robot", color, 2.5);
    let (sx, sy) = frame.px(r.start[0], r.start[1]);
    let (gx, gy) = frame.px(r.goal[0], r.goal[1]);
    let _ = writeln!(out, r#"  <circle class="start" cx="{sx:.1}" cy="{sy:.1}" r="5" fill="{color}"/>"#);
    let _ = writeln!(
        out,
        r##"  <circle class="goal" cx="{gx:.1}" cy="{gy:.1}" r="8" fill="none" stroke="#27ae60" stroke-width="2"/>"##
    );
    out.push_str("</svg>\n");
    out
}

pub fn cmd_plot(log: &Path, out: &Path, episode: usize, scenario: Option<&str>) -> Result<(), Failure> {
    let records = read_log(log).map_err(config_error)?;
    let r = records
        .get(episode)
        .ok_or_else(|| config_error(anyhow!("log has {} episodes, asked for index {episode}", records.len())))?;
    let grid = match scenario {
        Some(s) => Some(Engine::new(load_scenario(s)?).map_err(config_error)?.grid().clone()),
        None => None,
    };
    let svg = render_episode_svg(r, grid.as_deref());
    fs::write(out, svg).with_context(|| format!("cannot write {}", out.display())).map_err(runtime_error)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub quantity: &'static str,
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
    pub fraction: f64,
}

fn histogram(values: &[f64], low: f64, high: f64, width: f64, quantity: &'static str) -> Vec<HistogramRow> {
    let n = ((high - low) / width).round().max(1.0) as usize;
    let mut counts = vec![0usize; n];
    for &v in values {
        let i = ((v - low) / width).floor();
        let i = (i.max(0.0) as usize).min(n - 1);
        counts[i] += 1;
    }
    let total = values.len().max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramRow {
            quantity,
            bin_low: low + i as f64 * width,
            bin_high: low + (i + 1) as f64 * width,
            count,
            fraction: count as f64 / total,
        })
        .collect()
}

/// Linear-speed bins of 0.1 m/s from 0 up to the largest speed seen, and
/// angular-speed bins of a quarter of the turn-rate limit over
/// [-omega_max, omega_max].
pub fn velocity_histogram(records: &[EpisodeRecord]) -> Vec<HistogramRow> {
    let v: Vec<f64> = records.iter().flat_map(|r| r.trajectory.iter().map(|s| s.v)).collect();
    let w: Vec<f64> = records.iter().flat_map(|r| r.trajectory.iter().map(|s| s.omega)).collect();
    let v_top = v.iter().copied().fold(0.0f64, f64::max);
    let v_high = ((v_top / SPEED_BIN).floor() + 1.0) * SPEED_BIN;
    let mut rows = histogram(&v, 0.0, v_high, SPEED_BIN, "linear_velocity");
    rows.extend(histogram(&w, -OMEGA_MAX, OMEGA_MAX, OMEGA_BIN, "angular_velocity"));
    rows
}

pub fn cmd_histogram(log: &Path, out: &Path, successful_only: bool) -> Result<(), Failure> {
    let mut records = read_log(log).map_err(config_error)?;
    if successful_only {
        records.retain(|r| r.outcome == Outcome::Success);
    }
    let rows = velocity_histogram(&records);
    let write = || -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(out)?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(runtime_error)
}
