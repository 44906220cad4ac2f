use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::gridworld::{DoorSpec, Orientation};

use super::components::connected_components;
use super::graph::{NodeId, VoronoiGraph};

/// Lower bound on the kernel width across the door.
pub const SIGMA_MINOR_FLOOR_M: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoorKernel {
    pub door_id: String,
    pub center: Point,
    /// Unit vector along the opening.
    pub axis: Point,
    pub sigma_major: f64,
    pub sigma_minor: f64,
}

impl DoorKernel {
    /// Unnormalized anisotropic Gaussian, peak 1 at the center.
    pub fn eval(&self, p: Point) -> f64 {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let a = dx * self.axis.x + dy * self.axis.y;
        let b = -dx * self.axis.y + dy * self.axis.x;
        (-0.5 * ((a / self.sigma_major).powi(2) + (b / self.sigma_minor).powi(2))).exp()
    }

    /// Integral of the kernel along a straight line crossing its center perpendicular
    /// to the opening.
    pub fn crossing_integral(&self) -> f64 {
        self.sigma_minor * (2.0 * std::f64::consts::PI).sqrt()
    }
}

pub fn build_door_kernels(doors: &[DoorSpec], resolution: f64) -> Vec<DoorKernel> {
    doors
        .iter()
        .map(|d| {
            let (along, across) = match d.orientation {
                Orientation::Horizontal => (d.bbox.width(), d.bbox.height()),
                Orientation::Vertical => (d.bbox.height(), d.bbox.width()),
            };
            let long = along.max(across).max(0) as f64 * resolution;
            let short = along.min(across).max(0) as f64 * resolution;
            let axis = match d.orientation {
                Orientation::Horizontal => Point::new(1.0, 0.0),
                Orientation::Vertical => Point::new(0.0, 1.0),
            };
            DoorKernel {
                door_id: d.id.clone(),
                center: d.bbox.center_m(resolution),
                axis,
                sigma_major: (0.5 * long).max(SIGMA_MINOR_FLOOR_M),
                sigma_minor: (0.5 * short).max(SIGMA_MINOR_FLOOR_M),
            }
        })
        .collect()
}

/// Half the peak crossing integral of the narrowest kernel. Infinite with no kernels.
pub fn default_tau(kernels: &[DoorKernel]) -> f64 {
    kernels
        .iter()
        .map(|k| 0.5 * k.crossing_integral())
        .fold(f64::INFINITY, f64::min)
}

/// Line integral of the summed kernels along a polyline, midpoint rule with steps no
/// longer than `step`.
pub fn polyline_integral(kernels: &[DoorKernel], polyline: &[Point], step: f64) -> f64 {
    let mut total = 0.0;
    for seg in polyline.windows(2) {
        let len = seg[0].dist(seg[1]);
        if len == 0.0 {
            continue;
        }
        let n = (len / step).ceil().max(1.0) as usize;
        let ds = len / n as f64;
        for i in 0..n {
            let p = seg[0].lerp(seg[1], (i as f64 + 0.5) / n as f64);
            total += kernels.iter().map(|k| k.eval(p)).sum::<f64>() * ds;
        }
    }
    total
}

/// Removes every edge whose kernel integral exceeds `tau` and labels the remaining
/// connected components as regions. `components` keeps the pre-cut labeling.
pub fn separate_regions(
    graph: &VoronoiGraph,
    kernels: &[DoorKernel],
    tau: f64,
    step: f64,
) -> (VoronoiGraph, Vec<(NodeId, NodeId)>) {
    let mut g = graph.clone();
    let cut: Vec<(NodeId, NodeId)> = graph
        .edges()
        .filter(|e| polyline_integral(kernels, &e.polyline, step) > tau)
        .map(|e| (e.u, e.v))
        .collect();
    for (u, v) in &cut {
        g.remove_edge(*u, *v);
    }
    g.compact_edges();
    g.regions = connected_components(&g);
    (g, cut)
}
