use crate::geom::{Cell, Grid};

use super::{BevMap, Occupancy};

/// Per-cell Euclidean distance (meters, cell center to cell center) to the nearest
/// Occupied cell. Unknown cells are not obstacles. `f64::INFINITY` when the map holds
/// no obstacle at all.
#[derive(Clone, Debug, PartialEq)]
pub struct Esdf {
    pub resolution: f64,
    dist: Grid<f64>,
}

impl Esdf {
    pub fn get(&self, c: Cell) -> Option<f64> {
        self.dist.get(c).copied()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.dist
    }
}

/// Exact squared-distance transform of one line (Felzenszwalb & Huttenlocher lower envelope).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let mut seeded = f[0].is_finite();
    for q in 1..n {
        if !f[q].is_finite() {
            continue;
        }
        if !seeded {
            v[0] = q;
            seeded = true;
            continue;
        }
        let intersect = |p: usize| {
            ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64)
        };
        let mut s = intersect(v[k]);
        // z[0] is -inf, so this stops at k = 0.
        while s <= z[k] {
            k -= 1;
            s = intersect(v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    if !seeded {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

pub fn compute_esdf(map: &BevMap) -> Esdf {
    let (w, h) = (map.width(), map.height());
    let mut sq: Vec<f64> = map
        .grid()
        .as_slice()
        .iter()
        .map(|m| {
            if m.state == Occupancy::Occupied {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let n = w.max(h);
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for x in 0..w {
        for y in 0..h {
            line[y] = sq[y * w + x];
        }
        edt_1d(&line[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            sq[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        line[..w].copy_from_slice(&sq[y * w..(y + 1) * w]);
        edt_1d(&line[..w], &mut out[..w], &mut v, &mut z);
        sq[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    let dist = sq
        .into_iter()
        .map(|d| d.sqrt() * map.resolution)
        .collect();
    Esdf {
        resolution: map.resolution,
        dist: Grid::from_vec(w, h, dist),
    }
}
