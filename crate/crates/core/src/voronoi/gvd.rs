use crate::geom::{Cell, Grid};
use crate::mapping::{BevMap, Esdf};

use super::components::connected_components;
use super::graph::VoronoiGraph;

/// Neighbors P2..P9 clockwise from north, as offsets in a y-down image sense.
/// Orientation does not matter for thinning as long as the cycle is consistent.
const RING: [(i32, i32); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

fn ring(mask: &Grid<bool>, c: Cell) -> [bool; 8] {
    let mut p = [false; 8];
    for (k, (dx, dy)) in RING.iter().enumerate() {
        p[k] = mask.get(c.offset(*dx, *dy)).copied().unwrap_or(false);
    }
    p
}

/// Zhang–Suen thinning, in place, until stable.
pub fn thin(mask: &mut Grid<bool>) {
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            doomed.clear();
            for (c, on) in mask.iter() {
                if !*on {
                    continue;
                }
                let p = ring(mask, c);
                let b = p.iter().filter(|v| **v).count();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
                if a != 1 {
                    continue;
                }
                let (n, e, s, w) = (p[0], p[2], p[4], p[6]);
                let keep = if pass == 0 {
                    (n && e && s) || (e && s && w)
                } else {
                    (n && e && w) || (n && s && w)
                };
                if !keep {
                    doomed.push(c);
                }
            }
            for c in &doomed {
                *mask.get_mut(*c).unwrap() = false;
            }
            changed |= !doomed.is_empty();
        }
        if !changed {
            break;
        }
    }
}

/// Grid skeleton of known free space, as a graph.
///
/// The mask is every Free cell whose clearance is at least `min_clearance_m`. After
/// thinning, every remaining cell becomes a node (row-major ids). Edges join
/// 4-neighbors, and diagonal neighbors only when they share no 4-neighbor on the
/// skeleton, so staircases do not form triangles.
pub fn extract_gvd(esdf: &Esdf, map: &BevMap, min_clearance_m: f64) -> VoronoiGraph {
    let (w, h) = (map.width(), map.height());
    let res = map.resolution;
    let mut mask = Grid::new(w, h, false);
    for (c, m) in map.grid().iter() {
        let clear = esdf.get(c).unwrap_or(0.0);
        if m.state == crate::mapping::Occupancy::Free && clear >= min_clearance_m {
            *mask.get_mut(c).unwrap() = true;
        }
    }
    thin(&mut mask);

    let mut g = VoronoiGraph::new();
    let mut ids = Grid::new(w, h, u32::MAX);
    for (c, on) in mask.iter() {
        if *on {
            let id = g.add_node(c.center(res), c, esdf.get(c).unwrap_or(f64::INFINITY));
            *ids.get_mut(c).unwrap() = id;
        }
    }
    let on = |c: Cell| mask.get(c).copied().unwrap_or(false);
    for (c, id) in ids.iter() {
        if *id == u32::MAX {
            continue;
        }
        for (dx, dy) in [(1, 0), (0, 1)] {
            let n = c.offset(dx, dy);
            if on(n) {
                g.add_edge(*id, ids[n], res, Vec::new());
            }
        }
        for (dx, dy) in [(1, 1), (-1, 1)] {
            let n = c.offset(dx, dy);
            if on(n) && !on(c.offset(dx, 0)) && !on(c.offset(0, dy)) {
                g.add_edge(*id, ids[n], res * std::f64::consts::SQRT_2, Vec::new());
            }
        }
    }
    g.components = connected_components(&g);
    g
}
