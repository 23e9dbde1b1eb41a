use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use super::{Cell, OccupancyGrid, WorldError};
use crate::geometry::Vec2;

/// Marks every cell whose box comes within `radius` of an occupied cell's
/// box.
pub fn inflate(grid: &OccupancyGrid, radius: f64) -> OccupancyGrid {
    let mut out = grid.clone();
    if radius <= 0.0 {
        return out;
    }
    let res = grid.resolution();
    let reach = (radius / res).ceil() as i64;
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    for cy in 0..h {
        for cx in 0..w {
            if !grid.is_occupied((cx as usize, cy as usize)) {
                continue;
            }
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    // Gap between the two boxes, in cells.
                    let gx = (dx.abs() - 1).max(0) as f64;
                    let gy = (dy.abs() - 1).max(0) as f64;
                    if gx.hypot(gy) * res < radius {
                        out.set_occupied((nx as usize, ny as usize), true);
                    }
                }
            }
        }
    }
    out
}

/// Result of the grid search: visited cells from start to goal and the path
/// cost in meters (1 per straight step, sqrt 2 per diagonal, times the
/// resolution).
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cells: Vec<Cell>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on f, then prefer larger g, then lower index.
        other.f.total_cmp(&self.f).then_with(|| self.g.total_cmp(&other.g)).then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// 8-connected A* on `grid`. Diagonal moves require both adjacent
/// orthogonal cells to be free. The start and goal cells themselves are
/// exempt from the occupancy check.
pub fn astar_cells(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<GridPath> {
    let (w, h) = (grid.width(), grid.height());
    let idx = |c: Cell| c.1 * w + c.0;
    let free = |c: Cell| c == start || c == goal || !grid.is_occupied(c);
    let heuristic = |c: Cell| {
        let dx = c.0.abs_diff(goal.0) as f64;
        let dy = c.1.abs_diff(goal.1) as f64;
        dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
    };

    let mut g_score = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut closed = vec![false; w * h];
    let mut open = BinaryHeap::new();
    g_score[idx(start)] = 0.0;
    open.push(Frontier { f: heuristic(start), g: 0.0, idx: idx(start) });

    while let Some(Frontier { g, idx: cur, .. }) = open.pop() {
        if closed[cur] {
            continue;
        }
        closed[cur] = true;
        let c = (cur % w, cur / w);
        if c == goal {
            let mut cells = vec![c];
            let mut at = cur;
            while parent[at] != usize::MAX {
                at = parent[at];
                cells.push((at % w, at / w));
            }
            cells.reverse();
            return Some(GridPath { cells, cost: g * grid.resolution() });
        }
        for (dx, dy) in NEIGHBORS {
            let (nx, ny) = (c.0 as i64 + dx, c.1 as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let n = (nx as usize, ny as usize);
            if !free(n) || closed[idx(n)] {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && (!free((nx as usize, c.1)) || !free((c.0, ny as usize))) {
                continue;
            }
            let tentative = g + if diagonal { SQRT_2 } else { 1.0 };
            if tentative < g_score[idx(n)] {
                g_score[idx(n)] = tentative;
                parent[idx(n)] = cur;
                open.push(Frontier { f: tentative + heuristic(n), g: tentative, idx: idx(n) });
            }
        }
    }
    None
}

/// True when every cell touched by the segment is free, apart from the
/// cells listed in `exempt`.
pub fn segment_clear(grid: &OccupancyGrid, a: Vec2, b: Vec2, exempt: &[Cell]) -> bool {
    let ga = grid.world_to_grid_units(a);
    let gb = grid.world_to_grid_units(b);
    let length = (gb - ga).norm();
    // Sample at quarter-cell spacing and also test the cells either side
    // of exact corner crossings.
    let steps = (length * 4.0).ceil().max(1.0) as usize;
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let blocked = |gx: f64, gy: f64| {
        let (cx, cy) = (gx.floor() as i64, gy.floor() as i64);
        if cx < 0 || cy < 0 || cx >= w || cy >= h {
            return true;
        }
        let cell = (cx as usize, cy as usize);
        !exempt.contains(&cell) && grid.is_occupied(cell)
    };
    let mut prev = (ga.x.floor() as i64, ga.y.floor() as i64);
    for i in 0..=steps {
        let p = ga.lerp(gb, i as f64 / steps as f64);
        if blocked(p.x, p.y) {
            return false;
        }
        let cur = (p.x.floor() as i64, p.y.floor() as i64);
        if cur.0 != prev.0 && cur.1 != prev.1 {
            // Diagonal hop: both side cells must be free.
            if blocked(cur.0 as f64 + 0.5, prev.1 as f64 + 0.5) || blocked(prev.0 as f64 + 0.5, cur.1 as f64 + 0.5) {
                return false;
            }
        }
        prev = cur;
    }
    true
}

/// Plans the nominal path: A* over the inflated grid, then line-of-sight
/// shortcutting. The returned polyline starts at `start` and ends at
/// `goal` exactly.
pub fn plan_global_path(
    grid: &OccupancyGrid,
    start: Vec2,
    goal: Vec2,
    inflation_radius: f64,
) -> Result<Vec<Vec2>, WorldError> {
    let start_cell = grid.world_to_cell(start).ok_or(WorldError::Unreachable)?;
    let goal_cell = grid.world_to_cell(goal).ok_or(WorldError::Unreachable)?;
    if grid.is_occupied(start_cell) || grid.is_occupied(goal_cell) {
        return Err(WorldError::Unreachable);
    }
    let inflated = inflate(grid, inflation_radius);
    let raw = astar_cells(&inflated, start_cell, goal_cell).ok_or(WorldError::Unreachable)?;

    let mut points = Vec::with_capacity(raw.cells.len() + 2);
    points.push(start);
    if raw.cells.len() > 2 {
        points.extend(raw.cells[1..raw.cells.len() - 1].iter().map(|&c| grid.cell_center(c)));
    }
    points.push(goal);

    let exempt = [start_cell, goal_cell];
    let mut smoothed = vec![start];
    let mut anchor = 0;
    while anchor < points.len() - 1 {
        let mut next = anchor + 1;
        for j in (anchor + 2..points.len()).rev() {
            if segment_clear(&inflated, points[anchor], points[j], &exempt) {
                next = j;
                break;
            }
        }
        smoothed.push(points[next]);
        anchor = next;
    }
    Ok(smoothed)
}
