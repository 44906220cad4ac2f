//! Deterministic 2D rearrangement world: ground truth, sensing, motion and magic actions.

mod scene;
mod sense;
mod sim;

pub use scene::{
    default_free_space, default_legend, Articulation, CellKind, DoorSpec, DoorState, LegendEntry,
    ObjectSpec, Orientation, RoomAnnotation, SceneSpec, StaticCell, DEFAULT_RESOLUTION_M,
    SCHEMA_VERSION,
};
pub use sense::{
    Observation, RevealedCell, VisibleObject, RAY_STEP_RAD, SENSOR_FOV_RAD, SENSOR_RANGE_M,
};
pub use sim::{
    load_scene, ActionResult, Atom, MagicVerb, MotionAction, RobotState, SimState, WorldDelta,
    FORWARD_STEP_M, MAX_TURN_RAD, REACH_RADIUS_M,
};

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("malformed scene file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("reading scene: {0}")]
    Io(#[from] std::io::Error),
}
