//! The episode loop: sense, map, rebuild the scene graph, filter, plan, execute.

mod episode;
mod geometry;
mod motion;
mod subpolicy;
mod suite;

pub use episode::{run_episode, AgentConfig, AgentState, EpisodeOutcome, StepLog};
pub use geometry::{build_geometry, omniscient_scene, Geometry, GeometryParams};
pub use motion::{drive, face_point, spin, turn_to, Perception, SPIN_TURNS};
pub use subpolicy::{
    execute_subpolicy, FrontierBlacklist, Outcome, Workspace, APPROACH_RADII_M,
    APPROACH_SAMPLES, FEEDBACK_EXPLORED, FEEDBACK_NO_PATH, FEEDBACK_UNKNOWN,
};
pub use suite::{load_episode, load_suite, Episode, SuiteEntry, SuiteError, SuiteManifest};

#[cfg(test)]
mod tests;
