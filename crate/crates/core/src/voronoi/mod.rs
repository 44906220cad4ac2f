//! Navigational Voronoi graph: skeleton extraction, chain contraction and door cuts.

mod components;
mod doors;
mod export;
mod graph;
mod gvd;
mod sparsify;

pub use components::{closest_node, connected_components, label_count};
pub use doors::{
    build_door_kernels, default_tau, polyline_integral, separate_regions, DoorKernel,
    SIGMA_MINOR_FLOOR_M,
};
pub use export::edge_list;
pub use graph::{polyline_length, Labels, NodeId, VEdge, VNode, VoronoiGraph};
pub use gvd::{extract_gvd, thin};
pub use sparsify::sparsify;

/// Default chain-contraction threshold, meters.
pub const DEFAULT_SPARSIFY_C: f64 = 1.0;

#[cfg(test)]
mod tests;
