use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::geom::{Cell, Grid};

use super::BevMap;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Moves: 4 orthogonal (cost 1) and 4 diagonal (cost √2), in cell units. Diagonal moves
/// may not cut a corner: both orthogonal cells they pass must be free.
const MOVES: [(i32, i32, f64); 8] = [
    (1, 0, 1.0),
    (0, 1, 1.0),
    (-1, 0, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT2),
    (-1, 1, SQRT2),
    (-1, -1, SQRT2),
    (1, -1, SQRT2),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<Cell>,
    /// Path length in meters.
    pub cost: f64,
}

impl Path {
    pub fn steps(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }
}

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = (a.x - b.x).abs() as f64;
    let dy = (a.y - b.y).abs() as f64;
    dx.max(dy) + (SQRT2 - 1.0) * dx.min(dy)
}

pub(crate) fn successors(map: &BevMap, c: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
    MOVES.iter().filter_map(move |&(dx, dy, w)| {
        let n = c.offset(dx, dy);
        if !map.is_free(n) {
            return None;
        }
        if dx != 0 && dy != 0 && !(map.is_free(c.offset(dx, 0)) && map.is_free(c.offset(0, dy))) {
            return None;
        }
        Some((n, w))
    })
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on (f, h, idx).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 8-connected A* over Free cells with the octile heuristic.
/// Unknown and Occupied cells are impassable. `None` when unreachable.
pub fn plan_path(map: &BevMap, start: Cell, goal: Cell) -> Option<Path> {
    if !map.is_free(start) || !map.is_free(goal) {
        return None;
    }
    let grid = map.grid();
    let n = grid.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let s = grid.index(start)?;
    let t = grid.index(goal)?;
    g[s] = 0.0;
    let mut open = BinaryHeap::new();
    let h0 = octile(start, goal);
    open.push(Entry { f: h0, h: h0, idx: s });
    while let Some(Entry { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == t {
            break;
        }
        let c = grid.cell_of(idx);
        for (nc, w) in successors(map, c) {
            let j = grid.index(nc).unwrap();
            if closed[j] {
                continue;
            }
            let cand = g[idx] + w;
            if cand < g[j] {
                g[j] = cand;
                parent[j] = idx;
                let h = octile(nc, goal);
                open.push(Entry { f: cand + h, h, idx: j });
            }
        }
    }
    if !g[t].is_finite() {
        return None;
    }
    let mut cells = vec![goal];
    let mut cur = t;
    while cur != s {
        cur = parent[cur];
        cells.push(grid.cell_of(cur));
    }
    cells.reverse();
    Some(Path {
        cells,
        cost: g[t] * map.resolution,
    })
}

/// Single-source path costs (meters) to every free cell under the same move model as
/// [`plan_path`]; infinite where unreachable.
pub fn cost_field(map: &BevMap, start: Cell) -> Grid<f64> {
    let grid = map.grid();
    let mut g = Grid::new(grid.width(), grid.height(), f64::INFINITY);
    let Some(s) = grid.index(start) else {
        return g;
    };
    if !map.is_free(start) {
        return g;
    }
    let d = g.as_mut_slice();
    d[s] = 0.0;
    let mut open = BinaryHeap::new();
    open.push(Entry { f: 0.0, h: 0.0, idx: s });
    while let Some(Entry { f, idx, .. }) = open.pop() {
        if f > d[idx] {
            continue;
        }
        for (nc, w) in successors(map, grid.cell_of(idx)) {
            let j = grid.index(nc).unwrap();
            let cand = d[idx] + w;
            if cand < d[j] {
                d[j] = cand;
                open.push(Entry { f: cand, h: 0.0, idx: j });
            }
        }
    }
    for v in d.iter_mut() {
        *v *= map.resolution;
    }
    g
}
