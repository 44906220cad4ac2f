use crate::gridworld::{DoorSpec, SimState};
use crate::language::LlmBackend;
use crate::mapping::{compute_esdf, find_frontiers, BevMap, Esdf, Frontier};
use crate::scenegraph::{Layers, SceneGraph};

use super::motion::Perception;
use crate::voronoi::{
    build_door_kernels, default_tau, extract_gvd, separate_regions, sparsify, NodeId,
    VoronoiGraph, DEFAULT_SPARSIFY_C,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryParams {
    pub sparsify_c: f64,
    /// Door-cut threshold; `None` derives it from the kernels.
    pub tau: Option<f64>,
    pub min_clearance_m: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            sparsify_c: DEFAULT_SPARSIFY_C,
            tau: None,
            min_clearance_m: 0.0,
        }
    }
}

/// Everything derived from one snapshot of the belief map.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub esdf: Esdf,
    pub sparse: VoronoiGraph,
    pub separated: VoronoiGraph,
    pub cut: Vec<(NodeId, NodeId)>,
    pub tau: f64,
    pub frontiers: Vec<Frontier>,
}

pub fn build_geometry(map: &BevMap, doors: &[DoorSpec], params: &GeometryParams) -> Geometry {
    let esdf = compute_esdf(map);
    let gvd = extract_gvd(&esdf, map, params.min_clearance_m);
    let sparse = sparsify(&gvd, params.sparsify_c);
    let kernels = build_door_kernels(doors, map.resolution);
    let tau = params.tau.unwrap_or_else(|| default_tau(&kernels));
    let (separated, cut) = separate_regions(&sparse, &kernels, tau, map.resolution / 4.0);
    Geometry {
        esdf,
        sparse,
        separated,
        cut,
        tau,
        frontiers: find_frontiers(map),
    }
}

/// Scene graph of the whole world as if everything had been seen.
pub fn omniscient_scene(
    sim: &SimState,
    params: &GeometryParams,
    backend: &dyn LlmBackend,
) -> (Geometry, SceneGraph) {
    let mut per = Perception::omniscient(sim);
    let geometry = build_geometry(&per.map, &sim.doors, params);
    let scene = per.tracker.update(
        &Layers {
            map: &per.map,
            sparse: &geometry.sparse,
            separated: &geometry.separated,
            frontiers: &geometry.frontiers,
            robot: &sim.robot,
        },
        backend,
    );
    (geometry, scene)
}
