use serde::{Deserialize, Serialize};

use crate::geom::Cell;

use super::{BevMap, Occupancy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    /// Member cells in row-major order.
    pub cells: Vec<Cell>,
    /// The member cell nearest the cluster mean.
    pub centroid: Cell,
    pub region: Option<u32>,
}

/// Free and 4-adjacent to at least one Unknown cell.
pub fn is_frontier_cell(map: &BevMap, c: Cell) -> bool {
    map.state(c) == Occupancy::Free
        && c
            .neighbors4()
            .iter()
            .any(|n| map.in_bounds(*n) && map.state(*n) == Occupancy::Unknown)
}

/// Maximal 8-connected clusters of frontier cells, ordered row-major by centroid.
pub fn find_frontiers(map: &BevMap) -> Vec<Frontier> {
    let grid = map.grid();
    let mut is_f = vec![false; grid.len()];
    for (i, f) in is_f.iter_mut().enumerate() {
        *f = is_frontier_cell(map, grid.cell_of(i));
    }
    let mut visited = vec![false; grid.len()];
    let mut out = Vec::new();
    for start in 0..grid.len() {
        if !is_f[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            let c = grid.cell_of(i);
            members.push(c);
            for n in c.neighbors8() {
                if let Some(j) = grid.index(n) {
                    if is_f[j] && !visited[j] {
                        visited[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        members.sort_by_key(|c| (c.y, c.x));
        let n = members.len() as f64;
        let mx = members.iter().map(|c| c.x as f64).sum::<f64>() / n;
        let my = members.iter().map(|c| c.y as f64).sum::<f64>() / n;
        let centroid = *members
            .iter()
            .min_by(|a, b| {
                let da = (a.x as f64 - mx).powi(2) + (a.y as f64 - my).powi(2);
                let db = (b.x as f64 - mx).powi(2) + (b.y as f64 - my).powi(2);
                da.total_cmp(&db)
            })
            .expect("cluster is non-empty");
        out.push(Frontier {
            cells: members,
            centroid,
            region: None,
        });
    }
    out.sort_by_key(|f| (f.centroid.y, f.centroid.x));
    out
}
