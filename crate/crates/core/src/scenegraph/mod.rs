//! Root → regions → objects hierarchy built on the Voronoi graph.

mod assign;
mod classify;
mod prune;
mod tracker;
mod types;

pub use assign::{assign_object, candidate_set, Assignment, CANDIDATE_RADIUS_M, LAMBDA, MIN_CANDIDATES};
pub use classify::{
    classify_messages, classify_region, classify_rules, parse_room_label, FALLBACK_ROOM,
    ROOM_VOCABULARY,
};
pub use prune::prune_unreachable;
pub use tracker::{nearest_node_raster, Layers, SceneTracker};
pub use types::{
    alpha_suffix, FrontierNode, ObjectNode, RegionNode, Relation, RelationKind, SceneGraph,
    Viewpoint,
};
